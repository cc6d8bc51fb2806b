"""The symmetrized problem on the equal-measure ball, solved in closed form.

With s = omega_n |x|^n the solution of -Delta v = f_sharp with Robin
boundary data is

    v(s) = v_m + integral_s^{|Omega|} F(t) t^(2/n - 2) / (n^2 omega_n^(2/n)) dt,
    v_m  = |Omega|^(1/n) / (beta n omega_n^(1/n)) * mean of f*,

where F(t) = integral_0^t f*.  For a piecewise-linear f* every integral here
is elementary, so v, v', and the level-set inverse phi are exact; no FEM is
involved on the ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import j0, j1, jn_zeros

from .domains import unit_ball_measure
from .rearrange import DecreasingProfile, constant_profile


class RadialError(ValueError):
    pass


class OracleError(RuntimeError):
    """A closed-form oracle could not bracket its root."""


@dataclass
class RadialSolution:
    """Profile v over s = omega_n |x|^n in [0, measure], decreasing."""

    measure: float
    n: int
    beta: float
    fstar: DecreasingProfile
    v_m: float = field(init=False)
    v_M: float = field(init=False)

    def __post_init__(self):
        if self.measure <= 0 or self.beta <= 0 or self.n < 2:
            raise RadialError("need measure > 0, beta > 0, n >= 2")
        if self.fstar.total <= 0 or self.fstar.values[0] <= 0:
            raise RadialError("f* must not be identically zero")
        if abs(self.fstar.total - self.measure) > 1e-9 * self.measure:
            raise RadialError("f* must live on [0, measure]")
        n = self.n
        omega = unit_ball_measure(n)
        self._cn = n * n * omega ** (2.0 / n)
        s = self.fstar.s
        f = self.fstar.values
        slopes = (f[1:] - f[:-1]) / (s[1:] - s[:-1])
        fcum = np.concatenate([[0.0], np.cumsum(0.5 * (f[:-1] + f[1:]) * (s[1:] - s[:-1]))])
        # F(t) = q0 + q1 t + q2 t^2 on segment i (monomial basis)
        self._q2 = 0.5 * slopes
        self._q1 = f[:-1] - slopes * s[:-1]
        self._q0 = fcum[:-1] - f[:-1] * s[:-1] + 0.5 * slopes * s[:-1] ** 2
        self._q0[0] = 0.0  # F(0) = 0 exactly on the first segment
        self._s = s
        self._fcum = fcum
        self.v_m = self.measure ** (1.0 / n) / (self.beta * n * omega ** (1.0 / n)) \
            * (fcum[-1] / self.measure)
        w_right = self._antiderivative(s[1:], np.arange(len(s) - 1))
        w_left = self._antiderivative(s[:-1], np.arange(len(s) - 1))
        seg_int = w_right - w_left
        back = np.concatenate([np.cumsum(seg_int[::-1])[::-1], [0.0]])
        self._w_at_breaks = back  # W(s_i) = integral_{s_i}^{S} g
        self.v_M = self.v_m + float(back[0])

    # -- elementary integrals ------------------------------------------------

    def _antiderivative(self, t, j):
        """Antiderivative of g(t) = F(t) t^(2/n-2) / c_n on segment j at t."""
        nu = 2.0 / self.n - 2.0
        q0, q1, q2 = self._q0[j], self._q1[j], self._q2[j]
        e0, e1, e2 = nu + 1.0, nu + 2.0, nu + 3.0
        tt = np.maximum(t, 1e-300)  # t = 0 only occurs where q0 = 0 exactly
        with np.errstate(divide="ignore", invalid="ignore"):
            if abs(e0) < 1e-14:  # n = 2: the q0 term integrates to a log
                t0 = np.where(q0 != 0.0, q0 * np.log(tt), 0.0)
            else:
                t0 = np.where(q0 != 0.0, q0 * tt ** e0 / e0, 0.0)
        return (t0 + q1 * tt ** e1 / e1 + q2 * tt ** e2 / e2) / self._cn

    def _locate(self, s):
        return np.clip(np.searchsorted(self._s, s, side="right") - 1, 0, len(self._s) - 2)

    def fstar_cumulative(self, t):
        return self.fstar.cumulative(t)

    def slope_g(self, s):
        """g(s) = F(s) s^(2/n-2)/c_n = -v'(s); nonnegative."""
        s = np.asarray(s, dtype=float)
        nu = 2.0 / self.n - 2.0
        F = self.fstar.cumulative(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = F * np.maximum(s, 1e-300) ** nu / self._cn
        # at s = 0 the product F(s) s^nu tends to f*(0) s^(2/n-1): finite for n=2
        if self.n == 2:
            out = np.where(s <= 0.0, self.fstar.values[0] / self._cn, out)
        return out

    def value(self, s):
        """v(s), vectorized; s outside [0, measure] is clamped."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.measure)
        j = self._locate(s)
        w = self._w_at_breaks[j + 1] + (self._antiderivative(self._s[j + 1], j)
                                        - self._antiderivative(s, j))
        out = self.v_m + w
        return out if out.ndim else float(out)

    def dvalue(self, s):
        return -self.slope_g(s)

    # -- level sets -----------------------------------------------------------

    def phi(self, t):
        """Measure of {v > t}: inverts the strictly decreasing profile."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t).astype(float)
        v_breaks = self.v_m + self._w_at_breaks  # v at s-breakpoints, decreasing
        out = np.empty_like(t)
        out[t <= self.v_m] = self.measure
        out[t >= self.v_M] = 0.0
        mid = (t > self.v_m) & (t < self.v_M)
        if np.any(mid):
            tm = t[mid]
            # segment index along s: v decreasing, so search on -v_breaks
            j = np.clip(np.searchsorted(-v_breaks, -tm, side="right") - 1, 0,
                        len(self._s) - 2)
            lo = self._s[j]
            hi = self._s[j + 1]
            x = 0.5 * (lo + hi)
            for _ in range(80):
                fx = self.value(x) - tm
                move = fx > 0  # v too big -> s must grow
                lo = np.where(move, x, lo)
                hi = np.where(move, hi, x)
                g = self.slope_g(x)
                step = np.where(g > 0, fx / np.maximum(g, 1e-300), 0.0)
                xn = x + step  # v' = -g, Newton: x - f/v' = x + f/g
                bad = (xn <= lo) | (xn >= hi) | ~np.isfinite(xn)
                xn = np.where(bad, 0.5 * (lo + hi), xn)
                if np.all(np.abs(xn - x) <= 1e-15 * self.measure):
                    x = xn
                    break
                x = xn
            out[mid] = x
        out = np.clip(out, 0.0, self.measure)
        return float(out[0]) if scalar else out

    def dphi(self, t):
        """phi'(t) = -1/g(phi(t)) on (v_m, v_M), 0 outside."""
        t = np.asarray(t, dtype=float)
        s = self.phi(t)
        g = self.slope_g(s)
        out = np.where((t > self.v_m) & (t < self.v_M) & (g > 0), -1.0 / np.maximum(g, 1e-300), 0.0)
        return out if out.ndim else float(out)

    # -- norms and export -----------------------------------------------------

    def lorentz_power_integral(self, p: float, q: float) -> float:
        """integral t^(q-1) phi^(q/p) dt via the substitution t = v(s)."""
        if p <= 0 or q <= 0:
            raise RadialError("Lorentz exponents must be positive")
        plateau = self.measure ** (q / p) * self.v_m ** q / q
        from .rearrange import _batched_segment_integral

        ratio = q / p
        scale = self.measure ** ratio * self.v_M ** q

        def f(_, s):
            return self.value(s) ** (q - 1.0) * s ** ratio * self.slope_g(s)

        acc = _batched_segment_integral(f, self._s[:-1].astype(float),
                                        self._s[1:].astype(float), scale, 1e-13)
        return plateau + acc

    def distribution(self):
        return _RadialDistribution(self)

    def profile(self, num: int = 2048) -> DecreasingProfile:
        sg = self.measure * 0.5 * (1.0 - np.cos(np.pi * np.linspace(0.0, 1.0, num)))
        return DecreasingProfile(s=sg, values=self.value(sg))

    def export_text(self, num: int = 2048) -> str:
        return self.profile(num).export_text()


class _RadialDistribution:
    """Distribution-function view of a radial solution (mu = phi)."""

    def __init__(self, rs: RadialSolution):
        self.rs = rs
        v_breaks = rs.v_m + rs._w_at_breaks
        self.breaks = np.unique(np.concatenate([[0.0], v_breaks, [rs.v_M]]))
        self.total_measure = rs.measure
        self.ess_sup = rs.v_M
        self.ess_inf = 0.0

    def mu(self, t):
        return self.rs.phi(t)

    def dmu(self, t):
        return self.rs.dphi(t)

    def ustar(self, s):
        return self.rs.value(s)

    def lorentz_power_integral(self, p, q):
        return self.rs.lorentz_power_integral(p, q)


def symmetrized_solution(measure: float, n: int, beta: float,
                         fstar: DecreasingProfile) -> RadialSolution:
    """Solution profile of the symmetrized problem from the rearranged datum."""
    return RadialSolution(measure=measure, n=n, beta=beta, fstar=fstar)


def symmetrized_constant_source(measure: float, beta: float, value: float = 1.0,
                                n: int = 2) -> RadialSolution:
    return symmetrized_solution(measure, n, beta, constant_profile(value, measure))


# ---------------------------------------------------------------------------
# disc oracles


def ball_closed_forms(R: float, beta: float, n: int = 2):
    """(radial profile u(r), torsion) for f = 1 on the disc of radius R:
    u(r) = (R^2 - r^2)/4 + R/(2 beta), T = pi R^4/8 + pi R^3/(2 beta)."""
    if R <= 0 or beta <= 0:
        raise RadialError("R and beta must be positive")
    if n != 2:
        raise RadialError("closed forms implemented for n = 2")

    def u(r):
        return (R * R - np.asarray(r, dtype=float) ** 2) / 4.0 + R / (2.0 * beta)

    torsion = math.pi * R ** 4 / 8.0 + math.pi * R ** 3 / (2.0 * beta)
    return u, torsion


def ball_torsion(R: float, beta: float) -> float:
    return ball_closed_forms(R, beta)[1]


def bessel_eigen_oracle(R: float, beta: float) -> float:
    """Smallest lambda with -sqrt(lambda) J1(sqrt(lambda) R) + beta J0(...) = 0.

    This is the principal Robin eigenvalue of the disc of radius R; it lies
    strictly below the Dirichlet value (j_{0,1}/R)^2, which brackets the root.
    """
    if R <= 0 or beta <= 0:
        raise RadialError("R and beta must be positive")
    j01 = float(jn_zeros(0, 1)[0])
    hi = (j01 / R) ** 2

    def fn(lam):
        if lam <= 0.0:
            return beta
        rt = math.sqrt(lam)
        return -rt * j1(rt * R) + beta * j0(rt * R)

    if not (fn(0.0) > 0.0 > fn(hi)):
        raise OracleError("failed to bracket the principal Robin eigenvalue")
    return float(brentq(fn, 0.0, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200))


def phi_distribution(rs: RadialSolution):
    """DistributionFunction-style view of phi(t) = |{v > t}|."""
    return rs.distribution()
