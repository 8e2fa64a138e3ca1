"""Exact ground truth for the expansions: dynamic programming, identity
checkers, renewal sums and Monte Carlo spot checks.

Everything here is either exact (rational mode), plain float arithmetic on
exact recursions (float mode), or an unbiased simulation with a confidence
interval.  No asymptotics enter: this module is what the expansion modules
are tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import basis
from .walk import LatticeLaw, LawError

__all__ = [
    "ResourceCapExceeded",
    "TailNotDecayed",
    "NotLeftContinuous",
    "PmfFrame",
    "SurvivalFrame",
    "RenewalValue",
    "McEstimate",
    "pmf",
    "delta_table",
    "conditioned_pmf",
    "conditioned_table",
    "recurrence_gap",
    "tau_tail",
    "spitzer_check",
    "leftcont_check",
    "duality_check",
    "renewal_V",
    "mc_tau_tail",
    "series_tail_sum",
]

DEFAULT_STATE_CAP = 200_000


class ResourceCapExceeded(RuntimeError):
    """DP state space grew past the configured cap."""


class TailNotDecayed(RuntimeError):
    """A truncated series' summands do not decay fast enough to extrapolate."""


class NotLeftContinuous(LawError):
    """Operation requires downward jumps of size at most one."""


@dataclass(frozen=True)
class PmfFrame:
    n: int
    mass: dict[int, Fraction]

    def prob(self, x: int) -> Fraction:
        return self.mass.get(x, Fraction(0))

    def cdf_at(self, x: int) -> Fraction:
        return sum((p for v, p in self.mass.items() if v <= x), Fraction(0))


@dataclass(frozen=True)
class SurvivalFrame:
    n: int
    mass: dict[int, Fraction]
    killed_to_date: Fraction

    def prob(self, x: int) -> Fraction:
        return self.mass.get(x, Fraction(0))

    def surviving(self) -> Fraction:
        return sum(self.mass.values(), Fraction(0))


@dataclass(frozen=True)
class RenewalValue:
    x: int
    value: float
    tail_estimate: float
    decay_exponent: float


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    half_width: float
    paths: int

    def covers(self, truth: float, widths: float = 1.0) -> bool:
        return abs(self.estimate - truth) <= widths * self.half_width


# ---------------------------------------------------------------------------
# elementary DP steps


def _convolve_dict(mass: dict[int, Fraction], law: LatticeLaw) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for v, p in mass.items():
        for u, q in law.atoms.items():
            key = v + u
            out[key] = out.get(key, Fraction(0)) + p * q
    return out


def _kernel(law: LatticeLaw) -> tuple[np.ndarray, int]:
    lo, hi = min(law.support), max(law.support)
    k = np.zeros(hi - lo + 1)
    for v, p in law.atoms.items():
        k[v - lo] = float(p)
    return k, lo


def _guard(width: int, cap: int) -> None:
    if width > cap:
        raise ResourceCapExceeded(f"state width {width} exceeds cap {cap}")


# ---------------------------------------------------------------------------
# unconditioned walk


def pmf(law: LatticeLaw, n: int, state_cap: int = DEFAULT_STATE_CAP) -> PmfFrame:
    """Exact distribution of S_n by iterated convolution."""
    if n < 0:
        raise ValueError("n must be >= 0")
    mass = {0: Fraction(1)}
    for _ in range(n):
        mass = _convolve_dict(mass, law)
        _guard(len(mass), state_cap)
    return PmfFrame(n=n, mass=mass)


def delta_table(
    law: LatticeLaw,
    N: int,
    xs: tuple[int, ...] = (),
    state_cap: int = DEFAULT_STATE_CAP,
) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Float-mode sweep of the free walk up to horizon N.

    Returns (delta, point_masses) where delta[n] = 1/2 - P(S_n <= 0) for
    n = 0..N (delta[0] = -1/2) and point_masses[x][n] = P(S_n = x) for each
    requested x.
    """
    kern, klo = _kernel(law)
    vec = np.array([1.0])
    lo = 0
    delta = np.empty(N + 1)
    delta[0] = -0.5
    traces = {x: np.zeros(N + 1) for x in xs}
    for x in xs:
        if x == 0:
            traces[x][0] = 1.0
    for n in range(1, N + 1):
        vec = np.convolve(vec, kern)
        lo += klo
        _guard(vec.size, state_cap)
        # P(S_n <= 0): states lo .. lo+len-1
        upto = min(0 - lo + 1, vec.size)
        delta[n] = 0.5 - (vec[:upto].sum() if upto > 0 else 0.0)
        for x in xs:
            idx = x - lo
            if 0 <= idx < vec.size:
                traces[x][n] = vec[idx]
    return delta, traces


# ---------------------------------------------------------------------------
# killed walk (weak and strict)


def _min_alive(strict: bool) -> int:
    # weak killing removes states <= 0; strict killing keeps 0 alive
    return 0 if strict else 1


def conditioned_pmf(
    law: LatticeLaw,
    n: int,
    strict: bool = False,
    start: int = 0,
    state_cap: int = DEFAULT_STATE_CAP,
) -> list[SurvivalFrame]:
    """Exact survival frames for times 1..n.

    strict=False: b_n(x) = P(start + S_n = x, tau > n) with tau the first
    time the path enters (-inf, 0]; states x >= 1.
    strict=True: state 0 stays alive (killing only below 0); states x >= 0.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    floor = _min_alive(strict)
    mass = {start: Fraction(1)}
    killed = Fraction(0)
    frames = []
    for step in range(1, n + 1):
        mass = _convolve_dict(mass, law)
        dead = sum((p for v, p in mass.items() if v < floor), Fraction(0))
        mass = {v: p for v, p in mass.items() if v >= floor}
        _guard(len(mass), state_cap)
        killed += dead
        frames.append(SurvivalFrame(n=step, mass=mass, killed_to_date=killed))
    return frames


def conditioned_table(
    law: LatticeLaw,
    N: int,
    x_max: int,
    strict: bool = False,
    start: int = 0,
    state_cap: int = DEFAULT_STATE_CAP,
) -> np.ndarray:
    """Float table b[n, x] = P(start + S_n = x, tau > n), n = 0..N, x = 0..x_max."""
    floor = _min_alive(strict)
    kern, klo = _kernel(law)
    vec = np.array([1.0])
    lo = start
    out = np.zeros((N + 1, x_max + 1))
    if 0 <= start <= x_max:
        out[0, start] = 1.0
    for n in range(1, N + 1):
        vec = np.convolve(vec, kern)
        lo += klo
        if lo < floor:
            cut = floor - lo
            vec = vec[cut:]
            lo = floor
        _guard(vec.size, state_cap)
        hi = min(x_max, lo + vec.size - 1)
        if hi >= lo:
            out[n, lo : hi + 1] = vec[: hi - lo + 1]
    return out


def survivor_tail(
    law: LatticeLaw,
    x: int,
    N: int,
    strict: bool = False,
    state_cap: int = DEFAULT_STATE_CAP,
) -> np.ndarray:
    """Float P(tau_x > n) for n = 0..N, tau_x the first entry of x + S into
    the killed region."""
    floor = _min_alive(strict)
    kern, klo = _kernel(law)
    vec = np.array([1.0])
    lo = x
    out = np.empty(N + 1)
    out[0] = 1.0
    for n in range(1, N + 1):
        vec = np.convolve(vec, kern)
        lo += klo
        if lo < floor:
            cut = floor - lo
            vec = vec[cut:]
            lo = floor
        _guard(vec.size, state_cap)
        out[n] = vec.sum()
    return out


def tau_tail(
    law: LatticeLaw,
    x: int,
    N: int,
    mode: str = "rational",
    state_cap: int = DEFAULT_STATE_CAP,
):
    """P(tau_x > n) for n = 0..N.

    Rational mode returns a list of exact Fractions; float mode a numpy
    array.  tau_x = inf{n >= 1: x + S_n <= 0} (weak killing).
    """
    if x < 0:
        raise ValueError("start must be >= 0")
    if mode == "float":
        return survivor_tail(law, x, N, strict=False, state_cap=state_cap)
    mass = {x: Fraction(1)}
    out = [Fraction(1)]
    for _ in range(1, N + 1):
        mass = _convolve_dict(mass, law)
        mass = {v: p for v, p in mass.items() if v >= 1}
        _guard(len(mass), state_cap)
        out.append(sum(mass.values(), Fraction(0)))
    return out


def recurrence_gap(
    law: LatticeLaw,
    n: int,
    x: int,
    strict: bool = False,
) -> Fraction:
    """Exact defect of the convolution recurrence for killed-walk masses.

    Weak:   n*b_n(x) - p_n(x) - sum_(k<n) sum_(0<y<x) p_k(y) b_(n-k)(x-y)
    Strict: same with the inner sum over 0 <= y <= x.
    The recurrence is an identity; a nonzero gap flags a DP bug.
    """
    frames = conditioned_pmf(law, n, strict=strict)
    b = {m: frames[m - 1] for m in range(1, n + 1)}
    pf = {k: pmf(law, k) for k in range(1, n)}
    ys = range(0, x + 1) if strict else range(1, x)
    rhs = pmf(law, n).prob(x)
    for k in range(1, n):
        for y in ys:
            rhs += pf[k].prob(y) * b[n - k].prob(x - y)
    return Fraction(n) * b[n].prob(x) - rhs


# ---------------------------------------------------------------------------
# exact generating-function identities


def _series_exp(coeffs: list, N: int):
    """exp of a power series with zero constant term, truncated at order N.

    e_0 = 1, e_n = (1/n) sum_(k=1..n) k c_k e_(n-k); exact when the inputs
    are Fractions.
    """
    zero = coeffs[0] * 0
    e = [zero] * (N + 1)
    e[0] = zero + 1
    for n in range(1, N + 1):
        acc = zero
        for k in range(1, n + 1):
            acc += k * coeffs[k] * e[n - k]
        e[n] = acc / n
    return e


def _series_mul(a: list, b: list, N: int):
    zero = a[0] * 0
    out = [zero] * (N + 1)
    for i in range(min(len(a), N + 1)):
        ai = a[i]
        if ai == 0:
            continue
        for jj in range(min(len(b), N + 1 - i)):
            out[i + jj] += ai * b[jj]
    return out


def spitzer_check(law: LatticeLaw, N: int, mode: str = "rational"):
    """Max |[s^n] (1-s)^(-1/2) exp(sum Delta_n s^n / n) - P(tau_0 > n)_DP|.

    The factorization of the tau_0 generating function is exact, so the
    rational-mode discrepancy must be identically zero.
    """
    if mode == "rational":
        deltas = [Fraction(0)]
        mass = {0: Fraction(1)}
        for n in range(1, N + 1):
            mass = _convolve_dict(mass, law)
            deltas.append(
                Fraction(1, 2) - sum((p for v, p in mass.items() if v <= 0), Fraction(0))
            )
        coeffs = [Fraction(0)] + [deltas[n] / n for n in range(1, N + 1)]
        expo = _series_exp(coeffs, N)
        series = _series_mul(list(basis.a_seq(1, N).values), expo, N)
        truth = tau_tail(law, 0, N, mode="rational")
        return max(abs(series[n] - truth[n]) for n in range(N + 1))
    deltas, _ = delta_table(law, N)
    coeffs = [0.0] + [deltas[n] / n for n in range(1, N + 1)]
    expo = _series_exp(coeffs, N)
    series = _series_mul(list(basis.a_float(1, N)), expo, N)
    truth = tau_tail(law, 0, N, mode="float")
    return float(np.max(np.abs(np.asarray(series) - truth)))


def leftcont_check(law: LatticeLaw, x_max: int, N: int):
    """Exact max |P(tau_x = n) - (x/n) P(S_n = -x)| over 1<=x<=x_max, 1<=n<=N.

    Valid only for left-continuous walks (downward jumps of one).
    """
    if not law.tag.left_continuous:
        raise NotLeftContinuous("law has downward jumps larger than 1")
    worst = Fraction(0)
    pfs = []
    mass = {0: Fraction(1)}
    for n in range(1, N + 1):
        mass = _convolve_dict(mass, law)
        pfs.append(mass)
    for x in range(1, x_max + 1):
        tails = tau_tail(law, x, N, mode="rational")
        for n in range(1, N + 1):
            lhs = tails[n - 1] - tails[n]
            rhs = Fraction(x, n) * pfs[n - 1].get(-x, Fraction(0))
            worst = max(worst, abs(lhs - rhs))
    return worst


def duality_check(law: LatticeLaw, x: int, N: int, mode: str = "rational"):
    """Coefficient-wise defect of the first-passage duality factorization.

    sum_n P(tau_x > n) s^n = (1 + sum_(y=0..x-1) Btilde(s, y)) * sum_n P(tau_0 > n) s^n,
    with Btilde built from the reversed walk under strict killing.
    """
    if x < 1:
        raise ValueError("x must be >= 1")
    rev = law.reverse()
    if mode == "rational":
        frames = conditioned_pmf(rev, N, strict=True)
        factor = [Fraction(1)] + [
            sum((frames[n - 1].prob(y) for y in range(x)), Fraction(0))
            for n in range(1, N + 1)
        ]
        t0 = tau_tail(law, 0, N, mode="rational")
        tx = tau_tail(law, x, N, mode="rational")
        prod = _series_mul(factor, t0, N)
        return max(abs(prod[n] - tx[n]) for n in range(N + 1))
    table = conditioned_table(rev, N, x - 1, strict=True)
    factor = table.sum(axis=1)
    factor[0] = 1.0
    t0 = tau_tail(law, 0, N, mode="float")
    tx = tau_tail(law, x, N, mode="float")
    prod = np.convolve(factor, t0)[: N + 1]
    return float(np.max(np.abs(prod - tx)))


# ---------------------------------------------------------------------------
# renewal function and tail extrapolation


def series_tail_sum(
    summands: np.ndarray,
    first_n: int,
    basis_j: tuple[int, ...] = (2, 3, 4),
    min_exponent: float = 1.2,
) -> tuple[float, float, float]:
    """Extrapolate sum_(n>N) s_n for a sequence decaying like the a-basis.

    summands[i] = s_(first_n + i).  Fits the last quarter of the data on
    {a_n^(j)} columns and closes the sum with exact basis tails.  Returns
    (tail_value, tail_error_estimate, fitted_decay_exponent).  Raises
    TailNotDecayed when the raw log-log decay exponent is below
    min_exponent.
    """
    N_last = first_n + summands.size - 1
    lo = first_n + (3 * summands.size) // 4
    ns = np.arange(lo, N_last + 1)
    window = summands[lo - first_n :]
    mask = window != 0.0
    if mask.sum() >= 8:
        slope = -np.polyfit(np.log(ns[mask]), np.log(np.abs(window[mask])), 1)[0]
    else:
        # effectively zero tail
        return 0.0, float(np.abs(window).max(initial=0.0)), float("inf")
    if slope < min_exponent:
        raise TailNotDecayed(f"summand decay exponent {slope:.3f} < {min_exponent}")
    cols = np.stack([basis.a_float(j, N_last)[lo:] for j in basis_j], axis=1)
    coef, *_ = np.linalg.lstsq(cols, window, rcond=None)
    resid = window - cols @ coef
    tail = sum(c * basis.weighted_tail_sum(0, N_last, j) for c, j in zip(coef, basis_j))
    # Error: fit residual scale propagated over the tail length heuristically.
    resid_scale = float(np.abs(resid).max(initial=0.0))
    err = resid_scale * max(ns[-1], 1) / max(slope - 1.0, 0.2)
    return float(tail), err, float(slope)


def renewal_V(
    law: LatticeLaw,
    x: int,
    N: int = 8192,
    fit_tail: bool = True,
    strict: bool = False,
    state_cap: int = DEFAULT_STATE_CAP,
) -> RenewalValue:
    """V(x) = 1 + sum_(n>=1) P(S_n < x, tau_0 > n), truncated at N.

    The truncation tail is closed by fitting the summands on the a-basis
    (leading decay n^(-3/2)) and summing the fitted tail exactly.  With
    strict=True the sum is over the strict-killing walk and states <= x.
    """
    if x < 1:
        raise ValueError("x must be >= 1")
    hi = x if strict else x - 1
    table = conditioned_table(law, N, hi, strict=strict, state_cap=state_cap)
    summand = table[1:].sum(axis=1)  # P(S_n < x, tau > n) for n = 1..N
    total = 1.0 + float(summand.sum())
    if not fit_tail:
        return RenewalValue(x=x, value=total, tail_estimate=float("nan"), decay_exponent=float("nan"))
    tail, err, slope = series_tail_sum(summand, first_n=1)
    return RenewalValue(x=x, value=total + tail, tail_estimate=err, decay_exponent=slope)


# ---------------------------------------------------------------------------
# ladder-height structure


def ladder_height_dist(law: LatticeLaw, N: int = 1 << 12) -> np.ndarray:
    """Distribution of the first weak ascending ladder height.

    F[k] = P(S_sigma = k), sigma = inf{n >= 1 : S_n >= 0}; support is
    0..max(support)-ish (bounded).  The sub-ladder walk lives on states
    <= -1; landing increments decay like n^(-3/2), so the horizon
    truncation is closed per k by an a-basis tail fit.
    """
    hi = max(law.support)
    kern, klo = _kernel(law)
    inc = np.zeros((N + 1, hi + 1))
    vec = np.array([1.0])
    lo = 0
    for n in range(1, N + 1):
        vec = np.convolve(vec, kern)
        lo += klo
        cut = -1 - lo + 1  # states >= 0 are absorbed
        if cut < vec.size:
            landed = vec[max(cut, 0) :]
            base = lo + max(cut, 0)
            for i, m in enumerate(landed):
                k = base + i
                if 0 <= k <= hi:
                    inc[n, k] = m
            vec = vec[: max(cut, 0)]
        if vec.size == 0:
            break
    F = np.zeros(hi + 1)
    for k in range(hi + 1):
        col = inc[1:, k]
        if not col.any():
            continue
        tail = 0.0
        if col[-1] != 0.0:
            tail, _, _ = series_tail_sum(col, first_n=1)
        F[k] = col.sum() + tail
    return F


def ladder_renewal(law: LatticeLaw, y_max: int, N: int = 1 << 12) -> np.ndarray:
    """Renewal mass u(y) = sum_j P(j-th weak ascending ladder point = y),
    y = 0..y_max, from the exact renewal recursion over the (bounded)
    ladder height distribution.

    By time reversal, u equals the Green function of the reversed walk
    killed strictly below zero: u(y) = sum_(n>=0) P(S~_n = y, tau-bar > n).
    """
    F = ladder_height_dist(law, N)
    p0 = F[0]
    if p0 >= 1.0:
        raise LawError("degenerate ladder structure")
    u = np.zeros(y_max + 1)
    u[0] = 1.0 / (1.0 - p0)
    for y in range(1, y_max + 1):
        acc = 0.0
        for k in range(1, min(y, F.size - 1) + 1):
            acc += F[k] * u[y - k]
        u[y] = acc / (1.0 - p0)
    return u


# ---------------------------------------------------------------------------
# Monte Carlo


_MC_BATCH = 1 << 14


def mc_tau_tail(
    sampler,
    x: float,
    n: int,
    paths: int,
    seed: int,
    z: float = 1.96,
) -> McEstimate:
    """Unbiased MC estimate of P(tau_x > n) with a Wilson interval.

    sampler(rng, size) must return `size` iid increments.  Streams are
    Philox counter-based and split per fixed-size batch, so the result is
    reproducible for a given seed regardless of how work is scheduled.
    """
    if paths < 10_000:
        raise ValueError("need at least 1e4 paths for a meaningful interval")
    survived = 0
    done = 0
    batch_idx = 0
    base = np.random.Philox(key=seed)
    while done < paths:
        b = min(_MC_BATCH, paths - done)
        rng = np.random.Generator(base.jumped(batch_idx))
        pos = np.full(b, float(x))
        alive = np.ones(b, dtype=bool)
        for _ in range(n):
            if not alive.any():
                break
            steps = sampler(rng, int(alive.sum()))
            pos[alive] += steps
            alive[alive] = pos[alive] > 0.0
        survived += int(alive.sum())
        done += b
        batch_idx += 1
    phat = survived / paths
    denom = 1.0 + z * z / paths
    center = (phat + z * z / (2 * paths)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / paths + z * z / (4 * paths * paths))
    return McEstimate(estimate=center, half_width=half, paths=paths)
