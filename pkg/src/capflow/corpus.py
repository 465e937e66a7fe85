"""Reproducible families of test surfaces.

* :func:`perturbed_cap_lattice` sweeps perturbed caps over a fixed lattice of
  (n, theta, R, mode, relative amplitude) and keeps the strictly
  horocap-convex members.  The relative amplitude ``c`` sets the size of the
  curvature perturbation to ``c / R``.
* :func:`weak_fixtures` builds weakly horocap-convex surfaces that are flat
  (curvature exactly zero) on a central disk and bend smoothly outside it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .convexity import horocap_residual
from .errors import CapflowError
from .geometry import ProfileCurve, cap_angles, make_perturbed_cap, profile_from_tangent_angle

THETAS = (math.pi / 6, math.pi / 3, math.pi / 2)
LATTICE_R = (0.3, 0.5, 0.8, 1.2, 2.0, 3.5)
LATTICE_MODES = (1, 2, 3, 4)
LATTICE_REL = (-0.7, -0.4, -0.2, -0.1, -0.05, 0.05, 0.1, 0.2, 0.4, 0.7)
WEAK_TOL = 1e-10


@dataclass(frozen=True)
class CorpusItem:
    n: int
    theta: float
    R: float
    mode: int
    rel: float
    curve: ProfileCurve

    @property
    def label(self) -> str:
        return (f"n{self.n}_th{self.theta:.4f}_R{self.R:g}_m{self.mode}_c{self.rel:+g}")


def relative_to_amplitude(theta: float, R: float, mode: int, rel: float) -> float:
    """Displacement amplitude whose curvature perturbation is ``rel / R``."""
    L = R * cap_angles(theta, R)[0]
    return rel / R * (L / (mode * math.pi)) ** 2


def perturbed_cap_lattice(ns=(2, 3), thetas=THETAS, radii=LATTICE_R, modes=LATTICE_MODES,
                          rels=LATTICE_REL, M: int = 400, strict_only: bool = True):
    """All lattice members (strictly horocap-convex ones unless ``strict_only`` is False)."""
    out = []
    for n, th, R, m, c in itertools.product(ns, thetas, radii, modes, rels):
        try:
            curve = make_perturbed_cap(n, th, R, m, relative_to_amplitude(th, R, m, c), M)
        except CapflowError:
            continue
        if strict_only and not curve.meta.get("horocap_strict", False):
            continue
        out.append(CorpusItem(n, th, R, m, c, curve))
    return out


def flow_corpus(M: int = 200):
    """Small documented subset of the lattice used for full flow runs."""
    picks = [
        (2, math.pi / 2, 1.0, 1, 0.2, 1),
        (2, math.pi / 3, 0.5, 2, -0.2, 1),
        (2, math.pi / 6, 2.0, 1, 0.4, 2),
        (3, math.pi / 2, 0.8, 1, -0.2, 1),
        (3, math.pi / 3, 1.2, 1, 0.2, 2),
        (3, math.pi / 6, 0.5, 2, 0.1, 3),
    ]
    items = []
    for n, th, R, m, c, k in picks:
        curve = make_perturbed_cap(n, th, R, m, relative_to_amplitude(th, R, m, c), M)
        items.append((CorpusItem(n, th, R, m, c, curve), k))
    return items


def flat_center_profile(n: int, theta: float, flat_radius: float, bend: float, power: int = 4,
                        M: int = 400) -> ProfileCurve:
    """Profile with tangent angle ``bend * max(s - flat_radius, 0)^power``."""

    def phi(s):
        return bend * np.maximum(np.asarray(s) - flat_radius, 0.0) ** power

    return profile_from_tangent_angle(n, theta, phi, M, length_hint=math.sin(theta),
                                      meta={"kind": "flat_center", "flat_radius": flat_radius,
                                            "bend": bend, "power": power})


def weak_fixtures(count: int = 20, M: int = 400):
    """Weakly (not strictly) horocap-convex, non-flat surfaces."""
    out = []
    for n, th, f, g in itertools.product((2, 3), THETAS, (0.2, 0.4), (0.5, 0.8)):
        s0 = f * math.sin(th)
        width = g * math.sin(th)
        bend = 0.5 * th / width ** 4
        try:
            curve = flat_center_profile(n, th, s0, bend, 4, M)
        except CapflowError:
            continue
        rep = horocap_residual(curve)
        if rep.min_rho >= -WEAK_TOL and rep.min_height_slack > 0.0 and not rep.strict:
            out.append(curve)
        if len(out) == count:
            break
    return out
