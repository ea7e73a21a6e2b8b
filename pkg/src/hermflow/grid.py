"""Periodic-grid Fourier machinery: sampling, Leray projection, convection,
and the quadratic interaction tensor of the coefficient dynamics.

Grid convention: cell-centered nodes x_j = -L + (j + 1/2) h with h = 2L/n on
[-L, L)^3, discrete frequencies eta_k = pi k / L for integer k in the usual
FFT ordering. `to_spectral` approximates the continuous transform
int f(y) exp(-i y.eta) dy by its Riemann sum (spectrally accurate for
smooth decaying fields), and `to_grid` is its exact discrete inverse, so
fields synthesized from closed-form transforms and fields sampled in
physical space live on the same footing.

The interaction tensor follows the adjoint arrangement: the projector
symbol is real and symmetric per mode, so the discrete Parseval identity
gives <P q, w> = <q, P w> exactly in grid arithmetic. Projecting the
(synthesized) dual fields once each, instead of every sampled convection
product, removes all per-pair transforms; the pairings then reduce to
moment contractions of the projected duals against per-axis power tables.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ValidationError
from .kernel import KernelTable, gaussian_kernel
from .polynomial import Polynomial, VectorPolyField
from .solenoidal import CompositeBasis, DualFrame, SolenoidalBasis, weighted_dual

# -- grid spec and transforms --------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    L: float
    n: int
    dealias: bool = True

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValidationError("box half-width L must be positive and finite")
        if self.n < 16 or self.n % 2:
            raise ValidationError("n must be an even integer >= 16")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    def axes(self) -> np.ndarray:
        return _axes(self.L, self.n)

    def freqs(self) -> np.ndarray:
        return _eta(self.L, self.n)

    def to_json_dict(self) -> dict:
        return {"L": self.L, "n": self.n, "dealias": self.dealias}


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


_CACHE: Dict[tuple, np.ndarray] = {}


def _cached(key, build):
    out = _CACHE.get(key)
    if out is None:
        out = _frozen(build())
        _CACHE[key] = out
    return out


def _axes(L: float, n: int) -> np.ndarray:
    h = 2.0 * L / n
    return _cached(("axes", L, n), lambda: -L + (np.arange(n) + 0.5) * h)


def _kint(n: int) -> np.ndarray:
    return _cached(("kint", n), lambda: np.fft.fftfreq(n, d=1.0 / n))


def _eta(L: float, n: int) -> np.ndarray:
    return _cached(("eta", L, n), lambda: math.pi * _kint(n) / L)


def _eta_diff(L: float, n: int) -> np.ndarray:
    """Frequencies for differentiation-type symbols. The Nyquist slot holds
    both +n/2 and -n/2, so an odd symbol evaluated there is not even under
    the index mirror and would break Hermitian symmetry of real fields; the
    usual remedy is to zero it."""

    def build():
        e = _eta(L, n).copy()
        e[n // 2] = 0.0
        return e

    return _cached(("eta_diff", L, n), build)


def _phase3(L: float, n: int) -> np.ndarray:
    def build():
        p = np.exp(1j * math.pi * _kint(n) * (1.0 / n - 1.0))
        return p[:, None, None] * p[None, :, None] * p[None, None, :]

    return _cached(("phase3", L, n), build)


def _eta_sq(L: float, n: int) -> np.ndarray:
    def build():
        e = _eta(L, n)
        return (
            e[:, None, None] ** 2 + e[None, :, None] ** 2 + e[None, None, :] ** 2
        )

    return _cached(("eta_sq", L, n), build)


def _exp_eta2m(L: float, n: int, m: int) -> np.ndarray:
    return _cached(
        ("exp_eta2m", L, n, m), lambda: np.exp(-(_eta_sq(L, n) ** m))
    )


def freq_sq(spec: GridSpec) -> np.ndarray:
    """|eta|^2 on the full frequency lattice (read-only)."""
    return _eta_sq(spec.L, spec.n)


def to_spectral(spec: GridSpec, f: np.ndarray) -> np.ndarray:
    """Riemann-sum approximation of int f(y) exp(-i y.eta) dy per mode."""
    return spec.h**3 * np.conj(_phase3(spec.L, spec.n)) * np.fft.fftn(f)


def to_grid(spec: GridSpec, g: np.ndarray) -> np.ndarray:
    """Exact inverse of `to_spectral`; complex output, callers take .real."""
    return np.fft.ifftn(g * _phase3(spec.L, spec.n)) / spec.h**3


# -- grid fields ----------------------------------------------------------------


@dataclass
class GridVectorField:
    """Samples of a 3-vector field; `poly` keeps the exact source when the
    field was sampled from a polynomial without weight, which lets the
    convection operator differentiate symbolically instead of spectrally."""

    spec: GridSpec
    data: np.ndarray  # shape (3, n, n, n)
    poly: Optional[VectorPolyField] = None
    weight: str = "none"

    def __post_init__(self):
        n = self.spec.n
        if self.data.shape != (3, n, n, n):
            raise ValidationError("grid data must have shape (3, n, n, n)")

    def norm(self) -> float:
        return float(math.sqrt(self.spec.h**3 * np.sum(self.data**2)))


def sample(
    v: VectorPolyField,
    weight: str,
    spec: GridSpec,
    table: KernelTable | None = None,
    m: int = 1,
) -> GridVectorField:
    """Pointwise evaluation on the grid, optionally times the radial kernel.

    weight "kernel-F" uses the m=1 Gaussian closed form, or a cubic spline
    of a tabulated kernel when `table` is given (required for m >= 2; the
    table must cover the grid diagonal).
    """
    if weight not in ("none", "kernel-F"):
        raise ValidationError(f"unknown weight {weight!r}")
    ax = spec.axes()
    comps = [p.evaluate_grid([ax, ax, ax]) for p in v.components]
    if weight == "kernel-F":
        r = np.sqrt(_radius_sq(spec))
        if table is not None:
            rmax = math.sqrt(3.0) * float(np.max(np.abs(ax)))
            if table.radii[-1] < rmax:
                raise ValidationError(
                    f"kernel table ends at r={table.radii[-1]:g} but the grid "
                    f"diagonal reaches {rmax:g}"
                )
            from scipy.interpolate import CubicSpline

            F = CubicSpline(table.radii, table.values)(r)
        elif m == 1:
            F = gaussian_kernel(r)
        else:
            raise ValidationError("weight kernel-F with m >= 2 needs a KernelTable")
        comps = [c * F for c in comps]
        return GridVectorField(spec, np.stack(comps), poly=v, weight="kernel-F")
    return GridVectorField(spec, np.stack(comps), poly=v, weight="none")


def _radius_sq(spec: GridSpec) -> np.ndarray:
    def build():
        ax = _axes(spec.L, spec.n)
        return (
            ax[:, None, None] ** 2 + ax[None, :, None] ** 2 + ax[None, None, :] ** 2
        )

    return _cached(("radius_sq", spec.L, spec.n), build)


# -- closed-form transforms of poly x kernel fields ------------------------------

_Q_CACHE: Dict[tuple, Polynomial] = {}


def _q_poly(m: int, beta: Tuple[int, int, int]) -> Polynomial:
    """Real polynomial Q with d^beta exp(-|xi|^2m) = Q exp(-|xi|^2m)."""
    key = (m, beta)
    got = _Q_CACHE.get(key)
    if got is not None:
        return got
    if not any(beta):
        out = Polynomial.constant(3, 1)
    else:
        j = next(i for i, b in enumerate(beta) if b)
        prev = _q_poly(m, tuple(b - (1 if i == j else 0) for i, b in enumerate(beta)))
        r2 = Polynomial.zero(3)
        for i in range(3):
            e2 = [0, 0, 0]
            e2[i] = 2
            r2 = r2 + Polynomial.monomial(e2, 1)
        phi_j = Polynomial.variable(3, j).scale(2 * m)
        for _ in range(m - 1):
            phi_j = phi_j * r2
        out = prev.derive(tuple(1 if i == j else 0 for i in range(3))) - phi_j * prev
    _Q_CACHE[key] = out
    return out


def fourier_factors(p: Polynomial, m: int) -> List[Tuple[int, Polynomial]]:
    """Group FT[p F] = exp(-|xi|^2m) * sum_g i^g R_g(xi) by the power of i.

    Monomial rule: FT[y^gamma F] = i^|gamma| Q_gamma exp(-|xi|^2m).
    """
    groups: Dict[int, Polynomial] = {}
    for gamma, c in p.terms.items():
        g = sum(gamma) % 4
        q = _q_poly(m, gamma).scale(c)
        groups[g] = groups[g] + q if g in groups else q
    return [(g, q) for g, q in sorted(groups.items()) if not q.is_zero()]


def weighted_transform(
    v: VectorPolyField, spec: GridSpec, m: int
) -> List[np.ndarray]:
    """FT[v_c F] evaluated on the frequency lattice, one complex array per
    component."""
    eta = spec.freqs()
    decay = _exp_eta2m(spec.L, spec.n, m)
    out = []
    for p in v.components:
        acc = np.zeros((spec.n,) * 3, dtype=complex)
        for g, R in fourier_factors(p, m):
            acc += (1j) ** g * R.evaluate_grid([eta, eta, eta])
        out.append(acc * decay)
    return out


def synth_weighted(v: VectorPolyField, spec: GridSpec, m: int) -> GridVectorField:
    """Grid samples of v F via its closed-form transform (all m; exact up to
    periodization and the lattice Riemann sum)."""
    comps = [to_grid(spec, g).real for g in weighted_transform(v, spec, m)]
    return GridVectorField(spec, np.stack(comps), poly=v, weight="kernel-F")


def synth_duals(frame: DualFrame, spec: GridSpec) -> List[GridVectorField]:
    """Grid samples of the derivative-dual fields W_j of a level frame,
    from FT[W_c] = (-i)^k A_c exp(-|xi|^2m)."""
    eta = spec.freqs()
    decay = _exp_eta2m(spec.L, spec.n, frame.params.m)
    scalar = (-1j) ** frame.level
    fields = []
    for comps_A in frame.dual_transform_polys():
        comps = []
        for A in comps_A:
            if A.is_zero():
                comps.append(np.zeros((spec.n,) * 3))
            else:
                g = scalar * A.evaluate_grid([eta, eta, eta]) * decay
                comps.append(to_grid(spec, g).real)
        fields.append(GridVectorField(spec, np.stack(comps), weight="kernel-F"))
    return fields


# -- Leray projection and convection ---------------------------------------------


def _eta_axes(spec: GridSpec):
    e = _eta_diff(spec.L, spec.n)
    return e[:, None, None], e[None, :, None], e[None, None, :]


def _inv_eta_sq(spec: GridSpec) -> np.ndarray:
    """1/|eta|^2 with zeros wherever the differentiation frequencies vanish
    (the zero mode and pure-Nyquist modes pass through the projector)."""

    def build():
        e1, e2, e3 = _eta_axes(spec)
        r2 = e1**2 + e2**2 + e3**2
        sing = r2 == 0.0
        r2[sing] = 1.0
        inv = 1.0 / r2
        inv[sing] = 0.0
        return inv

    return _cached(("inv_eta_sq", spec.L, spec.n), build)


def project_spectral(gs: Sequence[np.ndarray], spec: GridSpec) -> List[np.ndarray]:
    """Apply the solenoidal symbol I - eta eta^T/|eta|^2 per mode."""
    e1, e2, e3 = _eta_axes(spec)
    common = (e1 * gs[0] + e2 * gs[1] + e3 * gs[2]) * _inv_eta_sq(spec)
    return [gs[0] - e1 * common, gs[1] - e2 * common, gs[2] - e3 * common]


def project(u: GridVectorField) -> GridVectorField:
    """Divergence-free part of u; the zero mode is left unchanged."""
    spec = u.spec
    gs = [to_spectral(spec, u.data[c]) for c in range(3)]
    out = [to_grid(spec, g).real for g in project_spectral(gs, spec)]
    return GridVectorField(spec, np.stack(out), weight=u.weight)


def spectral_divergence(u: GridVectorField) -> np.ndarray:
    """div u evaluated through the frequency domain."""
    spec = u.spec
    e1, e2, e3 = _eta_axes(spec)
    gs = [to_spectral(spec, u.data[c]) for c in range(3)]
    return to_grid(spec, 1j * (e1 * gs[0] + e2 * gs[1] + e3 * gs[2])).real


def convection_poly(v: VectorPolyField, w: VectorPolyField | None = None) -> VectorPolyField:
    """(v . grad) w, exact polynomial arithmetic; w defaults to v."""
    if w is None:
        w = v
    comps = []
    for i in range(3):
        acc = Polynomial.zero(3)
        for j in range(3):
            gj = [0, 0, 0]
            gj[j] = 1
            acc = acc + v.components[j] * w.components[i].derive(gj)
        comps.append(acc)
    return VectorPolyField(comps)


def _dealias_mask(spec: GridSpec) -> np.ndarray:
    def build():
        k = np.abs(_kint(spec.n))
        keep = k < spec.n / 3.0
        return (
            keep[:, None, None] & keep[None, :, None] & keep[None, None, :]
        ).astype(float)

    return _cached(("dealias", spec.n), build)


def convection(u: GridVectorField) -> GridVectorField:
    """(u . grad) u.

    Polynomial-sourced unweighted fields differentiate symbolically and
    resample (the periodized sample of a polynomial has no usable spectral
    derivative); everything else is pseudo-spectral with the 2/3 rule when
    spec.dealias is set.
    """
    spec = u.spec
    if u.poly is not None and u.weight == "none":
        return sample(convection_poly(u.poly), "none", spec)
    mask = _dealias_mask(spec) if spec.dealias else 1.0
    e1, e2, e3 = _eta_axes(spec)
    gs = [to_spectral(spec, u.data[c]) * mask for c in range(3)]
    uf = [to_grid(spec, g).real for g in gs]
    out = []
    for i in range(3):
        acc = np.zeros((spec.n,) * 3)
        for j, ej in enumerate((e1, e2, e3)):
            acc += uf[j] * to_grid(spec, 1j * ej * gs[i]).real
        out.append(acc)
    return GridVectorField(spec, np.stack(out), weight=u.weight)


def pair_fields(a: GridVectorField, b: GridVectorField) -> float:
    """Grid quadrature of the pointwise dot product."""
    if a.spec != b.spec:
        raise ValidationError("fields live on different grids")
    return float(a.spec.h**3 * np.sum(a.data * b.data))


# -- interaction tensor -----------------------------------------------------------


@dataclass
class InteractionTensor:
    m: int
    N: int
    spec: GridSpec
    labels_a: List[Tuple[int, int]]
    labels_g: List[Tuple[int, int]]
    labels_b: List[Tuple[int, int]]
    values: np.ndarray  # (nA, nG, nB)
    errors: np.ndarray
    refined: dict = field(default_factory=dict)

    def entry(self, a: int, g: int, b: int) -> float:
        return float(self.values[a, g, b])

    def max_error(self) -> float:
        return float(np.max(self.errors)) if self.errors.size else 0.0

    def flagged(self, tol: float = 1e-3) -> List[Tuple[int, int, int]]:
        """Index triples whose refinement disagreement exceeds tol (absolute,
        or relative for entries above 1): these pairings are box-sensitive
        and their values should not be trusted beyond the error bar."""
        scale = np.maximum(1.0, np.abs(self.values))
        bad = np.argwhere(self.errors > tol * scale)
        return [tuple(map(int, t)) for t in bad]

    def to_json_dict(self) -> dict:
        triples = []
        for a, la in enumerate(self.labels_a):
            for g, lg in enumerate(self.labels_g):
                for b, lb in enumerate(self.labels_b):
                    triples.append(
                        {
                            "alpha": list(la),
                            "gamma": list(lg),
                            "beta": list(lb),
                            "value": float(self.values[a, g, b]),
                            "error": float(self.errors[a, g, b]),
                        }
                    )
        return {
            "m": self.m,
            "N": self.N,
            "grid": self.spec.to_json_dict(),
            "refined": self.refined,
            "entries": triples,
        }


def _as_blocks(basis) -> List[SolenoidalBasis]:
    if isinstance(basis, CompositeBasis):
        return basis.blocks
    if isinstance(basis, SolenoidalBasis):
        return [basis]
    raise ValidationError("expected a SolenoidalBasis or CompositeBasis")


def _labels(basis) -> List[Tuple[int, int]]:
    return [(b.level, i) for b in _as_blocks(basis) for i in range(b.count)]


def _fields(basis) -> List[VectorPolyField]:
    return [v for b in _as_blocks(basis) for v in b.fields]


def _block_gram_inv(basis) -> np.ndarray:
    """Float block-diagonal inverse of the kernel-weighted Gram.

    Per-level blocks come from the exact rational inverse; cross-level
    blocks vanish for m=1 (kernel-derivative identity), which is the only
    m the quadratic dynamics uses.
    """
    blocks = _as_blocks(basis)
    n = sum(b.count for b in blocks)
    out = np.zeros((n, n))
    start = 0
    for b in blocks:
        inv = weighted_dual(b)
        c = b.count
        out[start : start + c, start : start + c] = [
            [float(x) for x in row] for row in inv
        ]
        start += c
    return out


def _degree(p: Polynomial) -> int:
    d = p.degree()
    return int(d) if d != -math.inf else 0


def _moment_table(comp: np.ndarray, spec: GridSpec, dmax: int) -> np.ndarray:
    """T[d1, d2, d3] = h^3 sum_j y^(d1,d2,d3) comp(y_j) for powers <= dmax,
    by separable per-axis contractions."""
    ax = spec.axes()
    P = np.stack([ax**d for d in range(dmax + 1)], axis=1)  # (n, D)
    t = np.tensordot(comp, P, axes=([2], [0]))  # (n, n, D3)
    t = np.tensordot(t, P, axes=([1], [0]))  # (n, D3, D2)
    t = np.tensordot(t, P, axes=([0], [0]))  # (D3, D2, D1)
    return spec.h**3 * t.transpose(2, 1, 0)


def interaction_tensor(
    basisA,
    basisG,
    dualsB,
    spec: GridSpec,
    refine: bool = True,
    workers: int | None = None,
) -> InteractionTensor:
    """Quadratic coupling d_{alpha gamma beta} of the coefficient dynamics.

    For each (alpha, gamma) the convection (v*_alpha . grad) v*_gamma is
    built symbolically; its grid pairing against every projected dual
    v*_beta F (projector moved onto the duals by the discrete Parseval
    identity) is scaled by the exact level Gram inverse, with an overall
    minus sign from the convection side of the dynamics. `refine` repeats
    the computation with both box and point count doubled (fixed spacing);
    the per-entry error estimate is twice the disagreement, which makes
    box sensitivity directly visible: entries whose pairing integrals
    converge slowly, or not at all, carry error bars of their own size
    rather than a false precision.
    """
    fa, fg, fb = _fields(basisA), _fields(basisG), _fields(dualsB)
    blocks = _as_blocks(dualsB)
    params = blocks[0].params
    for other in _as_blocks(basisA) + _as_blocks(basisG) + blocks:
        if other.params != params:
            raise ValidationError("bases disagree on operator parameters")
    m = params.m
    qs = [[convection_poly(va, vg) for vg in fg] for va in fa]
    dmax = 0
    for row in qs:
        for q in row:
            for p in q.components:
                dmax = max(dmax, _degree(p))
    ginv = _block_gram_inv(dualsB)

    def compute(sp: GridSpec) -> np.ndarray:
        # moment tables of the projected duals, one per (dual, component)
        tables = np.zeros((len(fb), 3, dmax + 1, dmax + 1, dmax + 1))

        def fill(j: int) -> None:
            gs = weighted_transform(fb[j], sp, m)
            pw = [to_grid(sp, g).real for g in project_spectral(gs, sp)]
            for c in range(3):
                tables[j, c] = _moment_table(pw[c], sp, dmax)

        nw = max(1, workers or 1)
        if nw > 1 and len(fb) > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=nw) as pool:
                list(pool.map(fill, range(len(fb))))
        else:
            for j in range(len(fb)):
                fill(j)
        raw = np.zeros((len(fa), len(fg), len(fb)))
        for a in range(len(fa)):
            for g in range(len(fg)):
                acc = np.zeros(len(fb))
                for c, p in enumerate(qs[a][g].components):
                    for gamma, coef in p.terms.items():
                        acc += float(coef) * tables[:, c, gamma[0], gamma[1], gamma[2]]
                raw[a, g] = acc
        return -np.einsum("agj,bj->agb", raw, ginv)

    coarse = compute(spec)
    if refine:
        sp_fine = GridSpec(L=spec.L * 2.0, n=spec.n * 2, dealias=spec.dealias)
        fine = compute(sp_fine)
        values = fine
        errors = 2.0 * np.abs(fine - coarse)
        refined = {"L": sp_fine.L, "n": sp_fine.n}
    else:
        values = coarse
        errors = np.zeros_like(coarse)
        refined = {}
    return InteractionTensor(
        m=m,
        N=params.N,
        spec=spec,
        labels_a=_labels(basisA),
        labels_g=_labels(basisG),
        labels_b=_labels(dualsB),
        values=values,
        errors=errors,
        refined=refined,
    )


# -- binary grid dumps -------------------------------------------------------------


def dump_grid(u: GridVectorField, basepath: str) -> None:
    """Component-major little-endian float64 dump plus a JSON sidecar."""
    with open(basepath + ".bin", "wb") as fh:
        fh.write(np.ascontiguousarray(u.data, dtype="<f8").tobytes())
    sidecar = {
        "schema": "hermflow/1",
        "kind": "grid-field",
        "grid": u.spec.to_json_dict(),
        "components": 3,
        "dtype": "<f8",
        "order": "C",
        "layout": "component-major",
        "weight": u.weight,
    }
    with open(basepath + ".json", "w") as fh:
        json.dump(sidecar, fh, sort_keys=True)
        fh.write("\n")


def load_grid(basepath: str) -> GridVectorField:
    with open(basepath + ".json") as fh:
        side = json.load(fh)
    spec = GridSpec(
        L=float(side["grid"]["L"]),
        n=int(side["grid"]["n"]),
        dealias=bool(side["grid"]["dealias"]),
    )
    raw = np.fromfile(basepath + ".bin", dtype="<f8")
    data = raw.reshape(3, spec.n, spec.n, spec.n).astype(float)
    return GridVectorField(spec, data, weight=side.get("weight", "none"))
