"""Cap-equality functions f_k and the capillary quermassintegral inequalities.

``f_k`` is defined implicitly by ``W_k(cap) = f_k(W_{k-1}(cap))`` along the
one-parameter family of capillary caps.  The family is parameterized by the
boundary polar angle ``alpha``, which runs from 0 (caps shrinking to the
north pole) to ``theta`` (the flat ball, ``R = inf``), so both equality cases
live in one table.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import brentq

from .errors import DomainError, ExtrapolationError, MonotonicityError, PreconditionError
from .flow import capillary_support, killing_normal
from .geometry import ProfileCurve, check_n, check_theta, frame, make_cap
from .quermass import cap_quermass_exact, quermass_theta
from .symfunc import CurvatureSpectrum, normalized_symmetric

DEFAULT_GRID_SIZE = 513
TABLE_NODES = 2000
MONOTONE_TOL = 1e-9
RANGE_TOL = 1e-12


def default_grid(size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    return np.logspace(-3.0, 3.0, size)


@dataclass(frozen=True)
class FkTable:
    """Tabulated cap values with an interpolant for ``f_k``.

    ``R`` ends with ``inf`` (the flat ball).  The columns ``lower`` and
    ``upper`` hold ``W_{k-1}`` and ``W_k``.
    """

    n: int
    theta: float
    k: int
    R: np.ndarray
    alpha: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    nodes: int
    interpolant: str
    audit_deviation: float = math.nan

    def __post_init__(self):
        object.__setattr__(self, "_lo", self._interp(self.k - 1, self.lower))
        object.__setattr__(self, "_up", self._interp(self.k, self.upper))

    def _interp(self, j: int, values: np.ndarray):
        if self.interpolant == "pchip":
            return PchipInterpolator(self.alpha, values)
        # W_j, j >= 1, is stationary in alpha at the flat ball
        end = (1, 0.0) if j >= 1 and math.isinf(self.R[-1]) else "not-a-knot"
        return CubicSpline(self.alpha, values, bc_type=("not-a-knot", end))

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.lower[0]), float(self.lower[-1])

    def alpha_of(self, w: float) -> float:
        """Cap parameter with ``W_{k-1} = w``."""
        lo, hi = self.domain
        slack = RANGE_TOL * max(abs(hi), 1.0)
        if hi < w <= hi + slack:
            w = hi
        if not lo <= w <= hi:
            raise ExtrapolationError(f"W_{self.k - 1}={w!r} outside the table range [{lo}, {hi}]")
        i = int(np.searchsorted(self.lower, w))
        if i < self.lower.size and self.lower[i] == w:
            return float(self.alpha[i])
        a, b = self.alpha[max(i - 1, 0)], self.alpha[min(i, self.alpha.size - 1)]
        return float(brentq(lambda x: float(self._lo(x)) - w, a, b, xtol=1e-15, rtol=1e-15))

    def __call__(self, w: float) -> float:
        return float(self._up(self.alpha_of(w)))

    def to_csv(self, grid_note: str = "") -> str:
        buf = io.StringIO()
        buf.write(f"# n={self.n} theta={self.theta!r} k={self.k} rows={self.R.size} "
                  f"nodes={self.nodes} interpolant={self.interpolant} "
                  f"audit_deviation={self.audit_deviation!r} {grid_note}".rstrip() + "\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["R", "alpha", f"W{self.k - 1}", f"W{self.k}"])
        for row in zip(self.R, self.alpha, self.lower, self.upper):
            wr.writerow([f"{v:.17g}" for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FkTable":
        lines = text.splitlines()
        head = dict(tok.split("=", 1) for tok in lines[0].lstrip("# ").split() if "=" in tok)
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln.strip()])
        return cls(int(head["n"]), float(head["theta"]), int(head["k"]), rows[:, 0], rows[:, 1],
                   rows[:, 2], rows[:, 3], int(head["nodes"]), head["interpolant"],
                   float(head.get("audit_deviation", "nan")))


def _strictly_increasing(v: np.ndarray) -> bool:
    return bool(np.all(np.diff(v) > 0.0))


def tabulate_fk(n: int, theta: float, k: int, R_grid=None, nodes: int = TABLE_NODES,
                audit: bool = True, audit_stride: int = 1) -> FkTable:
    """Tabulate ``(W_{k-1}, W_k)`` on caps and build the ``f_k`` interpolant.

    Table values come from the closed-form cap quermassintegrals; when
    ``audit`` is set every ``audit_stride``-th row is also recomputed by
    quadrature on the cap profile with ``nodes`` segments and the largest
    deviation is stored as ``audit_deviation``.  The flat ball is appended as
    the last row.

    Raises
    ------
    MonotonicityError
        If either column fails to increase strictly along the cap family.
    """
    n = check_n(n)
    theta = check_theta(theta)
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside 1..{n}")
    R_grid = default_grid() if R_grid is None else np.asarray(R_grid, dtype=float)
    if R_grid.size < 64 or not _strictly_increasing(R_grid) or R_grid[0] <= 0.0:
        raise DomainError("R grid must be strictly increasing, positive, with >= 64 samples")
    if audit_stride < 1:
        raise DomainError("audit_stride must be a positive integer")
    rows = []
    deviation = 0.0
    for i, R in enumerate(list(R_grid) + [math.inf]):
        q = cap_quermass_exact(n, theta, R)
        if audit and math.isfinite(R) and i % audit_stride == 0:
            num = quermass_theta(make_cap(n, theta, R, nodes)).W
            deviation = max(deviation, float(np.max(np.abs(num[k - 1:k + 1] - q.W[k - 1:k + 1]))))
        rows.append((R, q.alpha, q.W[k - 1], q.W[k]))
    R, alpha, lower, upper = (np.array(c) for c in zip(*rows))
    table = build_table(n, theta, k, R, alpha, lower, upper, nodes if audit else 0)
    object.__setattr__(table, "audit_deviation", deviation if audit else math.nan)
    return table


def build_table(n, theta, k, R, alpha, lower, upper, nodes=0) -> FkTable:
    """Validate monotonicity and assemble the interpolant."""
    for name, col in (("alpha", alpha), (f"W_{k - 1}", lower), (f"W_{k}", upper)):
        if not _strictly_increasing(np.asarray(col)):
            bad = int(np.argmin(np.diff(col)))
            raise MonotonicityError(f"{name} is not strictly increasing along the cap family "
                                    f"(rows {bad}, {bad + 1})")
    table = FkTable(n, theta, k, np.asarray(R), np.asarray(alpha), np.asarray(lower),
                    np.asarray(upper), nodes, "cubic")
    if not _interpolant_monotone(table):
        table = replace(table, interpolant="pchip")
    return table


def _interpolant_monotone(table: FkTable, per_interval: int = 8) -> bool:
    """Derivatives non-negative up to ``MONOTONE_TOL`` times their maximum.

    Near the flat ball the columns are tangent to a constant to high order,
    so the spline derivative hovers around zero at round-off level there.
    """
    a = table.alpha
    x = (a[:-1, None] + np.diff(a)[:, None] * np.linspace(0.0, 1.0, per_interval)[None, :]).ravel()
    for spl in (table._lo, table._up):
        d = spl(x, 1)
        if d.min() < -MONOTONE_TOL * np.abs(d).max():
            return False
    return True


def check_inequality(curve: ProfileCurve, k: int, table: FkTable, method: str = "spline") -> float:
    """``W_k(curve) - f_k(W_{k-1}(curve))``; non-negative for horocap-convex curves."""
    if table.k != k or table.n != curve.n or abs(table.theta - curve.theta) > 1e-15:
        raise DomainError("table does not match the curve's (n, theta, k)")
    W = quermass_theta(curve, method).W
    return float(W[k] - table(W[k - 1]))


def hsiung_minkowski_residual(curve: ProfileCurve, k: int) -> float:
    """Relative residual of the capillary Minkowski-type identity.

    ``int (H_{k-1} <x + cos(theta) nu, e> - H_k <X_e, nu>) dA`` divided by
    ``int H_{k-1} |<x + cos(theta) nu, e>| dA`` (nodal trapezoid rule); the
    unscaled value when that scale is zero.
    """
    if not 1 <= k <= curve.n:
        raise DomainError(f"k={k} outside 1..{curve.n}")
    fr = frame(curve)
    spec = CurvatureSpectrum(curve.n, fr.kappa_prof, fr.kappa_rot)
    a = capillary_support(fr)
    h_prev = normalized_symmetric(k - 1, spec)
    h_k = normalized_symmetric(k, spec)
    num = np.sum((h_prev * a - h_k * killing_normal(fr)) * fr.area_weight)
    scale = np.sum(np.abs(h_prev * a) * fr.area_weight)
    # flat ball: the integrand vanishes pointwise and so does the scale
    return float(num / scale) if scale > 0.0 else float(num)


def heintze_karcher_value(curve: ProfileCurve) -> float:
    """``int (<x + cos(theta) nu, e> / H_1 - <X_e, nu>) dA``; zero on caps."""
    fr = frame(curve)
    h1 = normalized_symmetric(1, CurvatureSpectrum(curve.n, fr.kappa_prof, fr.kappa_rot))
    if np.any(h1 <= 0.0):
        j = int(np.flatnonzero(h1 <= 0.0)[0])
        raise PreconditionError(f"mean curvature not positive at node {j}")
    return float(np.sum((capillary_support(fr) / h1 - killing_normal(fr)) * fr.area_weight))
