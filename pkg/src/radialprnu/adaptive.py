"""Per-annulus objective, dynamic-set refinement, and the LMS predictor.

The search treats each annulus separately: an exhaustive scan of a small
candidate set around a predicted alpha, with the prediction supplied by a
least-mean-squares linear predictor running over the annulus sequence. Set
resolution and size adapt to how fast alpha is changing and to whether the
maximizer hit the edge of the previous set.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (AnnulusLattice, AnnulusPartition, RadialMap,
                       lattice_points, warp_annulus)

INV = "inv"
DIR = "dir"

INITIAL_SET_BOUND = 0.22
INITIAL_SET_STEP = 0.01
FIRST_PREDICTED_LAMBDA = 0.001
FIRST_PREDICTED_SET_SIZE = 9


@dataclass(frozen=True)
class SearchDefaults:
    predictor_length: int = 6      # U
    step_size: float = 1.0         # mu
    min_set_size: int = 7          # A_min
    model: str = "cubic"
    initial_bound: float = INITIAL_SET_BOUND
    initial_step: float = INITIAL_SET_STEP


@dataclass(frozen=True)
class AnnulusTrace:
    k: int
    alpha_star: float
    phi: float
    energy: float
    q_count: int
    candidates: tuple[float, ...]
    lam: float = 0.0
    set_size: int = 0
    skipped: bool = False


@dataclass
class SearchState:
    """LMS predictor state for one sweep direction."""

    u: np.ndarray
    beta: np.ndarray
    mu: float
    lam: float
    set_size: int
    min_set_size: int
    direction: str  # forward | backward

    @classmethod
    def forward(cls, alpha_star_k0: float, length: int = 6, mu: float = 1.0,
                min_set_size: int = 7):
        u = np.zeros(length)
        u[-1] = 1.0
        beta = np.zeros(length)
        beta[-1] = alpha_star_k0
        return cls(u=u, beta=beta, mu=mu, lam=FIRST_PREDICTED_LAMBDA,
                   set_size=FIRST_PREDICTED_SET_SIZE,
                   min_set_size=min_set_size, direction="forward")

    @classmethod
    def backward(cls, seed_alphas, length: int = 6, mu: float = 1.0,
                 min_set_size: int = 7):
        """Seed the regressor with already-computed forward values
        [alpha*_k0, alpha*_k0+1, ...]; short sequences repeat their last
        element."""
        seed = list(seed_alphas)
        if not seed:
            raise ValueError("need at least alpha*_k0 to seed")
        while len(seed) < length:
            seed.append(seed[-1])
        u = np.zeros(length)
        u[0] = 1.0
        return cls(u=u, beta=np.array(seed[:length]), mu=mu,
                   lam=FIRST_PREDICTED_LAMBDA,
                   set_size=FIRST_PREDICTED_SET_SIZE,
                   min_set_size=min_set_size, direction="backward")

    def predict(self) -> float:
        return float(self.u @ self.beta)


def lms_step(state: SearchState, alpha_star: float):
    """Consume the refined alpha* for the current annulus.

    Updates the weights from the a-posteriori error against the previous
    prediction, pushes alpha* into the regressor, and returns the next
    prediction together with the updated state.
    """
    err = alpha_star - state.predict()
    u = state.u + state.mu * err * state.beta
    if state.direction == "forward":
        beta = np.append(state.beta[1:], alpha_star)
    else:
        beta = np.append(alpha_star, state.beta[:-1])
    state = replace(state, u=u, beta=beta)
    return state.predict(), state


def adapt_resolution(prev_alpha: float, cur_alpha: float) -> float:
    """Grid resolution from the step between neighboring optima."""
    gap = abs(cur_alpha - prev_alpha)
    if gap > 0.1:
        return 0.1
    if gap > 0.01:
        return 0.01
    return 0.001


def adapt_set_size(maximizer_at_extreme: bool, set_size: int,
                   min_set_size: int) -> int:
    if maximizer_at_extreme:
        return set_size + 2
    if set_size <= min_set_size:
        return min_set_size
    return set_size - 2


def build_search_set(alpha_hat: float, lam: float, set_size: int):
    """Arithmetic grid of ``set_size`` (odd) points centered at alpha_hat."""
    if set_size < 3 or set_size % 2 == 0:
        raise ValueError("set size must be odd and >= 3")
    half = (set_size - 1) // 2
    return tuple(alpha_hat + lam * n for n in range(-half, half + 1))


def initial_search_set(bound: float = INITIAL_SET_BOUND,
                       step: float = INITIAL_SET_STEP):
    n = round(bound / step)
    return tuple(step * i for i in range(-n, n + 1))


def approach_map(approach: str, model: str, alpha: float) -> RadialMap:
    """Sampling map for one approach.

    The inverse approach brings the residual back onto the fingerprint
    grid, which samples the residual at the forward-mapped radius; the
    direct approach warps the fingerprint onto the residual grid, sampling
    it with the (truncated) inverse map.
    """
    if approach == INV:
        return RadialMap(model, alpha, "forward")
    if approach == DIR:
        return RadialMap(model, alpha, "inverse")
    raise ValueError(f"unknown approach {approach!r}")


def objective(fp_values: np.ndarray, res_values: np.ndarray,
              p: AnnulusPartition, k: int, m: RadialMap, approach: str,
              points: AnnulusLattice | None = None):
    """(phi_k, E_k, varphi) for one annulus and one candidate alpha.

    Inverse approach: the residual is warped and its energy is E. Direct
    approach: the fingerprint is warped; E is the untransformed residual
    energy over the surviving set.
    """
    if approach == INV:
        vals, surv = warp_annulus(res_values, p, k, m, points)
        other = fp_values[surv.rows, surv.cols]
        energy = float(np.sum(vals * vals))
    else:
        vals, surv = warp_annulus(fp_values, p, k, m, points)
        other = res_values[surv.rows, surv.cols]
        energy = float(np.sum(other * other))
    phi = float(np.sum(vals * other))
    if energy == 0.0:
        return phi, energy, None, surv.size
    return phi, energy, phi / energy, surv.size


def refine(fp_values, res_values, p: AnnulusPartition, k: int,
           candidates, approach: str, model: str = "cubic",
           lam: float = 0.0, set_size: int = 0) -> AnnulusTrace:
    """Exhaustive scan of the candidate set; ties prefer small |alpha|."""
    candidates = tuple(candidates)
    if not candidates:
        raise ValueError("empty candidate set")
    points = lattice_points(p, k)
    best = None
    results = {}
    for a in candidates:
        phi, energy, varphi, q = objective(
            fp_values, res_values, p, k, approach_map(approach, model, a),
            approach, points)
        if varphi is None:
            continue
        results[a] = (phi, energy, varphi, q)
    if not results:
        return AnnulusTrace(k=k, alpha_star=0.0, phi=0.0, energy=0.0,
                            q_count=0, candidates=candidates, lam=lam,
                            set_size=set_size, skipped=True)
    for a in sorted(results, key=lambda a: (abs(a), a)):
        if best is None or results[a][2] > results[best][2]:
            best = a
    phi, energy, _, q = results[best]
    return AnnulusTrace(k=k, alpha_star=float(best), phi=phi, energy=energy,
                        q_count=q, candidates=candidates, lam=lam,
                        set_size=set_size)


def select_initial_annulus(fp_values, res_values, p: AnnulusPartition,
                           approach: str = INV, model: str = "cubic") -> int:
    """Annulus maximizing the untransformed objective; ties -> smallest k."""
    best_k = None
    best_phi = None
    ident = approach_map(approach, model, 0.0)
    for k in range(1, p.count + 1):
        _, _, varphi, _ = objective(fp_values, res_values, p, k, ident, approach)
        if varphi is None:
            continue
        if best_phi is None or varphi > best_phi:
            best_k, best_phi = k, varphi
    if best_k is None:
        raise ValueError("every annulus has zero energy")
    return best_k


def optimize_alphas(fp_values, res_values, p: AnnulusPartition,
                    approach: str = INV,
                    defaults: SearchDefaults = SearchDefaults(),
                    k0: int | None = None):
    """Generate per-annulus traces in visit order k0, k0+1..L, k0-1..1.

    Yields one AnnulusTrace per annulus so callers can stop early. Skipped
    annuli (empty surviving set or zero energy) leave the predictor
    untouched and repeat the previous alpha* in the regressor.
    """
    model = defaults.model
    if k0 is None:
        k0 = select_initial_annulus(fp_values, res_values, p, approach, model)

    first = refine(fp_values, res_values, p, k0,
                   initial_search_set(defaults.initial_bound,
                                      defaults.initial_step),
                   approach, model, lam=defaults.initial_step,
                   set_size=2 * round(defaults.initial_bound
                                      / defaults.initial_step) + 1)
    yield first

    forward_alphas = [first.alpha_star]
    state = SearchState.forward(first.alpha_star, defaults.predictor_length,
                                defaults.step_size, defaults.min_set_size)
    prev_alpha = first.alpha_star
    for k in range(k0 + 1, p.count + 1):
        alpha_hat = state.predict()
        cands = build_search_set(alpha_hat, state.lam, state.set_size)
        trace = refine(fp_values, res_values, p, k, cands, approach, model,
                       lam=state.lam, set_size=state.set_size)
        yield trace
        alpha_star = prev_alpha if trace.skipped else trace.alpha_star
        at_extreme = (not trace.skipped
                      and (trace.alpha_star in (cands[0], cands[-1])))
        if not trace.skipped:
            _, state = lms_step(state, alpha_star)
        else:
            # keep weights; repeat previous alpha in the regressor
            state = replace(state, beta=np.append(state.beta[1:], alpha_star))
        state = replace(
            state,
            lam=adapt_resolution(prev_alpha, alpha_star),
            set_size=adapt_set_size(at_extreme, state.set_size,
                                    state.min_set_size))
        forward_alphas.append(alpha_star)
        prev_alpha = alpha_star

    if k0 > 1:
        state = SearchState.backward(forward_alphas,
                                     defaults.predictor_length,
                                     defaults.step_size,
                                     defaults.min_set_size)
        prev_alpha = first.alpha_star
        for k in range(k0 - 1, 0, -1):
            alpha_hat = state.predict()
            cands = build_search_set(alpha_hat, state.lam, state.set_size)
            trace = refine(fp_values, res_values, p, k, cands, approach,
                           model, lam=state.lam, set_size=state.set_size)
            yield trace
            alpha_star = prev_alpha if trace.skipped else trace.alpha_star
            at_extreme = (not trace.skipped
                          and (trace.alpha_star in (cands[0], cands[-1])))
            if not trace.skipped:
                _, state = lms_step(state, alpha_star)
            else:
                state = replace(state,
                                beta=np.append(alpha_star, state.beta[:-1]))
            state = replace(
                state,
                lam=adapt_resolution(prev_alpha, alpha_star),
                set_size=adapt_set_size(at_extreme, state.set_size,
                                        state.min_set_size))
            prev_alpha = alpha_star


def snr_loss_ratio(beta: float) -> float:
    """Detection SNR penalty of the simplified objective for a cardinality
    ratio ``beta`` between candidate support sets: (1 + b)^2 / (4 b)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return (1.0 + beta) ** 2 / (4.0 * beta)
