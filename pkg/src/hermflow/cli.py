"""Batch command-line entry point.

Every subcommand resolves its parameters in three layers: built-in
defaults, then a flat JSON config file (--config), then explicit flags.
The resolved configuration is echoed in the summary line and inside every
JSON artifact, so a run is reproducible from its config alone; execution
plumbing (worker count, output directory) is excluded from the echo so it
cannot change artifact bytes. Floats are serialized with repr (shortest
round-trip form), keys are sorted, and nothing time- or path-dependent is
written, which makes artifacts byte-identical across runs and worker
counts.

Exit codes: 0 success, 2 validation failure, 3 numerical non-convergence,
64 usage errors (unknown flags, bad values). The output directory is the
--outdir flag if given, else $HERMFLOW_OUTDIR, else the config file value,
else the working directory. A single-line JSON summary goes to stdout;
each entry carries "schema": "hermflow/1".
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from .dynamics import (
    Expansion,
    burnett_flow,
    burnett_trajectory,
    classify_zero,
    detect_resonance,
    expand,
    nodal_compare,
    nodal_extract,
    nse_galerkin,
    rate_check,
    semigroup_verify,
    stokes_flow,
    stokes_trajectory,
    unique_continuation_diagnostic,
)
from .errors import NonConvergenceError, ValidationError
from .grid import (
    GridSpec,
    InteractionTensor,
    interaction_tensor,
    project,
    spectral_divergence,
    synth_weighted,
)
from .kernel import envelope_fit, kernel_values, wkbj_constants
from .multiindex import enumerate_level
from .operators import OperatorParams, apply_B_star, level_enumerate, pairing
from .polynomial import Polynomial, VectorPolyField
from .solenoidal import composite_basis, divfree_kernel, fixture, validate_basis_field

SCHEMA = "hermflow/1"

# keys that steer execution but not results; kept out of the config echo
_PLUMBING = {"config", "outdir", "workers"}

DEFAULTS: Dict[str, dict] = {
    "basis": {"m": 1, "N": 3, "max_level": 10},
    "eig-check": {"m": [1, 2, 3], "N": 3, "max_level": 5},
    "biortho": {"m": [1, 2], "N": 3, "max_level": 4},
    "solenoidal": {"m": [1, 2], "N": 3, "kind": "fixture", "level": 3, "K": 3},
    "kernel": {"m": 2, "N": 3, "r_max": 36.0, "dr": 0.02, "tol": 1e-12},
    "wkbj": {"m": 2, "N": 3, "fit": False, "r_max": 36.0, "dr": 0.02},
    "d-tensor": {
        "m": 1,
        "N": 3,
        "K": 1,
        "L": 8.0,
        "n": 64,
        "refine": True,
        "check_projector": True,
        "flag_tol": 1e-3,
    },
    "evolve": {
        "model": "stokes",
        "data": "fixture:1:0",
        "tau": 3.0,
        "steps": 41,
        "K": None,
        "rtol": 1e-9,
        "L": 8.0,
        "n": 64,
        "tensor": None,
        "zero_tensor": False,
        "check_linear": False,
    },
    "nodal": {
        "model": "stokes",
        "data": "demo:nodal",
        "taus": "0,1,2,3,4",
        "R": 2.0,
        "cell": 0.05,
        "component": None,
        "K": 3,
        "steps": 41,
    },
    "classify": {
        "terms": None,
        "terms_file": None,
        "suite": None,
        "max_order": 6,
        "delta": 0.125,
        "threshold": 1e-7,
    },
    "verify": {
        "m": 1,
        "level": [1],
        "field_index": 0,
        "t_end": None,
        "L": 24.0,
        "n": 128,
        "n_tau": 31,
    },
}
for _cmd in DEFAULTS:
    DEFAULTS[_cmd].update({"outdir": ".", "workers": None, "seed": 0})


@dataclass(frozen=True)
class RunConfig:
    """The resolved parameters a run is reproducible from."""

    command: str
    params: Dict[str, object]

    def to_json_dict(self) -> dict:
        out: Dict[str, object] = {"command": self.command}
        for key in sorted(self.params):
            if key not in _PLUMBING:
                out[key] = _jsonable(self.params[key])
        return out


def _jsonable(x):
    if isinstance(x, Fraction):
        return {"num": x.numerator, "den": x.denominator}
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _dump_artifact(outdir: str, name: str, payload: dict) -> str:
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=1) + "\n"
    with open(os.path.join(outdir, name), "w") as fh:
        fh.write(text)
    return name


def _dump_text(outdir: str, name: str, text: str) -> str:
    with open(os.path.join(outdir, name), "w") as fh:
        fh.write(text)
    return name


def _as_int_list(v) -> List[int]:
    if isinstance(v, int):
        return [v]
    return [int(x) for x in v]


def _as_float_list(v) -> List[float]:
    if isinstance(v, str):
        return [float(x) for x in v.split(",") if x.strip() != ""]
    if isinstance(v, (int, float)):
        return [float(v)]
    return [float(x) for x in v]


def _workers(cfg: dict) -> int:
    return int(cfg["workers"] or os.cpu_count() or 1)


def _cloud_csv(cloud: np.ndarray) -> str:
    lines = ["x,y,z"]
    for row in np.asarray(cloud, float):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


# -- initial-data descriptors ----------------------------------------------------


def _nodal_demo_coeffs() -> Dict[Tuple[int, int], Fraction]:
    """Level-1 rotation plus half of a divergence-free level-3 field whose
    second component bends the ambient zero plane."""
    cb = composite_basis(1, 3)
    w = VectorPolyField(
        [
            Polynomial(3, {(0, 1, 0): Fraction(2), (2, 1, 0): Fraction(-1)}),
            Polynomial(3, {(1, 2, 0): Fraction(1), (1, 0, 0): Fraction(-2)}),
            Polynomial.zero(3),
        ]
    )
    u0 = cb.blocks[1].fields[0] + w.scale(Fraction(1, 2))
    e = expand(u0, cb)
    return {k: v for k, v in e.coeffs.items() if v != 0}


def _parse_data(desc: str, m: int, K_flag: Optional[int], seed: int):
    """Decode an initial-data descriptor into (coeffs, minimal level K).

    Forms: "fixture:k:i" / "kernel:k:i" (unit coefficient on composite label
    (k, i)), "l1:0=1,l3:10=0.5" (explicit labels), "demo:nodal",
    "demo:small" (seeded generic data over all labels up to K), or
    "file:path" pointing at a JSON object with a "coeffs" mapping.
    """
    try:
        return _parse_data_inner(desc, m, K_flag, seed)
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad data descriptor {desc!r}: {exc}") from exc


def _parse_data_inner(desc: str, m: int, K_flag: Optional[int], seed: int):
    desc = desc.strip()
    if desc.startswith("demo:"):
        name = desc[5:]
        if name == "nodal":
            if m != 1:
                raise ValidationError("demo:nodal is level-1 + level-3 data for m=1")
            coeffs = _nodal_demo_coeffs()
            return coeffs, max(k for k, _ in coeffs)
        if name == "small":
            K = 2 if K_flag is None else K_flag
            cb = composite_basis(m, K)
            rng = np.random.default_rng(seed)
            vals = 0.02 * rng.standard_normal(cb.count)
            return {lab: float(v) for lab, v in zip(cb.labels, vals)}, K
        raise ValidationError(f"unknown demo dataset {name!r}")
    if desc.startswith(("fixture:", "kernel:")):
        parts = desc.split(":")
        if len(parts) != 3:
            raise ValidationError(f"bad data descriptor {desc!r}")
        k, i = int(parts[1]), int(parts[2])
        return {(k, i): 1.0}, k
    if desc.startswith("file:"):
        with open(desc[5:]) as fh:
            doc = json.load(fh)
        raw = doc.get("coeffs", doc)
        coeffs = {}
        for key, val in raw.items():
            lev, idx = key.lstrip("l").split(":")
            coeffs[(int(lev), int(idx))] = float(val)
        if not coeffs:
            raise ValidationError("data file holds no coefficients")
        return coeffs, max(k for k, _ in coeffs)
    if "=" in desc:
        coeffs = {}
        for item in desc.split(","):
            key, val = item.split("=")
            lev, idx = key.strip().lstrip("l").split(":")
            coeffs[(int(lev), int(idx))] = float(val)
        return coeffs, max(k for k, _ in coeffs)
    raise ValidationError(f"unrecognized data descriptor {desc!r}")


def _zero_tensor(cb, m: int, spec: GridSpec) -> InteractionTensor:
    labs = list(cb.labels)
    c = len(labs)
    return InteractionTensor(
        m=m,
        N=3,
        spec=spec,
        labels_a=labs,
        labels_g=labs,
        labels_b=labs,
        values=np.zeros((c, c, c)),
        errors=np.zeros((c, c, c)),
        refined={"mode": "zero"},
    )


def _load_tensor(path: str) -> InteractionTensor:
    with open(path) as fh:
        doc = json.load(fh)
    if "entries" not in doc:
        raise ValidationError(f"{path} is not an interaction-tensor artifact")

    def ordered(key):
        seen: Dict[tuple, int] = {}
        for e in doc["entries"]:
            lab = tuple(e[key])
            if lab not in seen:
                seen[lab] = len(seen)
        return [lab for lab, _ in sorted(seen.items(), key=lambda kv: kv[1])]

    la, lg, lb = ordered("alpha"), ordered("gamma"), ordered("beta")
    ia = {lab: i for i, lab in enumerate(la)}
    ig = {lab: i for i, lab in enumerate(lg)}
    ib = {lab: i for i, lab in enumerate(lb)}
    values = np.zeros((len(la), len(lg), len(lb)))
    errors = np.zeros_like(values)
    for e in doc["entries"]:
        idx = (ia[tuple(e["alpha"])], ig[tuple(e["gamma"])], ib[tuple(e["beta"])])
        values[idx] = float(e["value"])
        errors[idx] = float(e["error"])
    spec = GridSpec(
        L=float(doc["grid"]["L"]),
        n=int(doc["grid"]["n"]),
        dealias=bool(doc["grid"].get("dealias", True)),
    )
    return InteractionTensor(
        m=int(doc["m"]),
        N=int(doc["N"]),
        spec=spec,
        labels_a=la,
        labels_g=lg,
        labels_b=lb,
        values=values,
        errors=errors,
        refined=doc.get("refined", {}),
    )


# -- subcommand handlers ----------------------------------------------------------


def _cmd_basis(cfg: dict, outdir: str) -> dict:
    params = OperatorParams(m=int(cfg["m"]), N=int(cfg["N"]))
    levels = []
    formula_ok = True
    total = 0
    for k in range(int(cfg["max_level"]) + 1):
        pairs = level_enumerate(k, params)
        expected = math.comb(k + params.N - 1, params.N - 1)
        formula_ok = formula_ok and len(pairs) == expected
        total += len(pairs)
        levels.append(
            {
                "level": k,
                "count": len(pairs),
                "expected_count": expected,
                "members": [ep.to_json_dict() for ep in pairs],
            }
        )
    name = _dump_artifact(
        outdir,
        "basis.json",
        {"schema": SCHEMA, "kind": "eigenfunction-basis", "config": _echo(cfg, "basis"), "levels": levels},
    )
    return {
        "levels": int(cfg["max_level"]) + 1,
        "total": total,
        "count_formula_ok": formula_ok,
        "artifacts": [name],
    }


def _cmd_eig_check(cfg: dict, outdir: str) -> dict:
    ms = _as_int_list(cfg["m"])
    results = []
    checked = 0
    for m in ms:
        params = OperatorParams(m=m, N=int(cfg["N"]))
        for k in range(int(cfg["max_level"]) + 1):
            for ep in level_enumerate(k, params):
                lhs = apply_B_star(ep.psi_star, params)
                if lhs != ep.psi_star.scale(ep.lam):
                    raise ValidationError(
                        f"eigen-relation failed at m={m}, beta={ep.beta}"
                    )
                checked += 1
        results.append({"m": m, "max_level": int(cfg["max_level"]), "pass": True})
    name = _dump_artifact(
        outdir,
        "eig_check.json",
        {"schema": SCHEMA, "kind": "eigen-check", "config": _echo(cfg, "eig-check"), "results": results},
    )
    return {"checked": checked, "all_pass": True, "m": ms, "artifacts": [name]}


def _cmd_biortho(cfg: dict, outdir: str) -> dict:
    ms = _as_int_list(cfg["m"])
    results = []
    checked = 0
    for m in ms:
        params = OperatorParams(m=m, N=int(cfg["N"]))
        eps = [
            ep
            for k in range(int(cfg["max_level"]) + 1)
            for ep in level_enumerate(k, params)
        ]
        for ea in eps:
            fact = math.prod(math.factorial(b) for b in ea.beta)
            for eb in eps:
                want = Fraction(fact) if ea.beta == eb.beta else Fraction(0)
                if pairing(ea.psi_star, eb.beta, params) != want:
                    raise ValidationError(
                        f"pairing failed at m={m}, beta={ea.beta}, gamma={eb.beta}"
                    )
                checked += 1
        results.append({"m": m, "pairs": len(eps) ** 2, "pass": True})
    name = _dump_artifact(
        outdir,
        "biortho.json",
        {"schema": SCHEMA, "kind": "biorthogonality", "config": _echo(cfg, "biortho"), "results": results},
    )
    return {"checked": checked, "all_pass": True, "m": ms, "artifacts": [name]}


def _cmd_solenoidal(cfg: dict, outdir: str) -> dict:
    kind = cfg["kind"]
    blocks = []
    counts: Dict[str, int] = {}
    if kind == "fixture":
        for m in _as_int_list(cfg["m"]):
            params = OperatorParams(m=m, N=int(cfg["N"]))
            k = 0
            while True:
                try:
                    fields = fixture(m, k)
                except ValidationError:
                    break
                for v in fields:
                    if not v.divergence().is_zero():
                        raise ValidationError(f"fixture m={m} k={k} not solenoidal")
                    validate_basis_field(v, k, params)
                if m == 1 and k in (1, 2) and len(fields) != k * (k + 2):
                    raise ValidationError(f"fixture count at m=1, k={k} is off")
                counts[f"m{m}:k{k}"] = len(fields)
                blocks.append(
                    {
                        "m": m,
                        "level": k,
                        "count": len(fields),
                        "fields": [[c.to_json_dict() for c in v.components] for v in fields],
                    }
                )
                k += 1
    elif kind == "kernel":
        for m in _as_int_list(cfg["m"]):
            params = OperatorParams(m=m, N=int(cfg["N"]))
            basis = divfree_kernel(int(cfg["level"]), params)
            for v in basis.fields:
                if not v.divergence().is_zero():
                    raise ValidationError(f"kernel field at m={m} not solenoidal")
            counts[f"m{m}:k{cfg['level']}"] = basis.count
            blocks.append(
                {
                    "m": m,
                    "level": int(cfg["level"]),
                    "count": basis.count,
                    "fields": [[c.to_json_dict() for c in v.components] for v in basis.fields],
                }
            )
    elif kind == "composite":
        for m in _as_int_list(cfg["m"]):
            cb = composite_basis(m, int(cfg["K"]))
            for blk in cb.blocks:
                counts[f"m{m}:k{blk.level}"] = blk.count
            blocks.append({"m": m, "K": int(cfg["K"]), "counts": [b.count for b in cb.blocks]})
    else:
        raise ValidationError(f"unknown kind {kind!r}")
    name = _dump_artifact(
        outdir,
        "solenoidal.json",
        {"schema": SCHEMA, "kind": f"solenoidal-{kind}", "config": _echo(cfg, "solenoidal"), "blocks": blocks},
    )
    return {"kind": kind, "counts": counts, "all_pass": True, "artifacts": [name]}


def _cmd_kernel(cfg: dict, outdir: str) -> dict:
    m = int(cfg["m"])
    radii = np.arange(0.0, float(cfg["r_max"]) + 1e-9, float(cfg["dr"]))
    table = kernel_values(m, int(cfg["N"]), radii=radii, tol=float(cfg["tol"]))
    name = _dump_text(outdir, f"kernel_m{m}.csv", table.to_csv())
    return {
        "m": m,
        "n_radii": len(table.radii),
        "f0": float(table.values[0]),
        "mass_error": table.mass_error,
        "quad_error": table.quad_error,
        "artifacts": [name],
    }


def _cmd_wkbj(cfg: dict, outdir: str) -> dict:
    consts = wkbj_constants(int(cfg["m"]), int(cfg["N"]))
    payload = {
        "schema": SCHEMA,
        "kind": "wkbj-constants",
        "config": _echo(cfg, "wkbj"),
        **consts.to_json_dict(),
    }
    summary = {
        "m": consts.m,
        "alpha": float(consts.alpha),
        "d0": consts.d0,
        "b0": consts.b0,
        "delta0": float(consts.delta0),
        "root_residual": consts.root_residual,
    }
    if cfg["fit"]:
        radii = np.arange(0.0, float(cfg["r_max"]) + 1e-9, float(cfg["dr"]))
        table = kernel_values(consts.m, consts.N, radii=radii)
        fit = envelope_fit(table, consts)
        payload["fit"] = fit
        payload["kernel_mass_error"] = table.mass_error
        summary.update(
            {
                "d0_rel_dev": fit["d0_rel_dev"],
                "alpha_rel_dev": fit["alpha_rel_dev"],
                "kernel_mass_error": table.mass_error,
            }
        )
    name = _dump_artifact(outdir, "wkbj.json", payload)
    summary["artifacts"] = [name]
    return summary


def _random_poly_field(rng: np.random.Generator, deg: int = 3) -> VectorPolyField:
    comps = []
    for _ in range(3):
        terms = {}
        for k in range(deg + 1):
            for beta in enumerate_level(k, 3):
                terms[beta] = Fraction(int(rng.integers(-8, 9)), 8)
        comps.append(Polynomial(3, terms))
    return VectorPolyField(comps)


def _projector_diagnostics(spec: GridSpec, m: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    u = synth_weighted(_random_poly_field(rng), spec, m)
    pu = project(u)
    ppu = project(pu)
    scale = float(np.linalg.norm(pu.data))
    idem = float(np.linalg.norm(ppu.data - pu.data)) / scale
    div = spectral_divergence(pu)
    divnorm = float(np.sqrt(spec.h**3 * np.sum(div * div)))
    rel_div = divnorm / (float(np.sqrt(spec.h**3)) * scale)
    return {"idempotence_rel": idem, "divergence_rel": rel_div}


def _cmd_d_tensor(cfg: dict, outdir: str) -> dict:
    m, K = int(cfg["m"]), int(cfg["K"])
    spec = GridSpec(L=float(cfg["L"]), n=int(cfg["n"]))
    cb = composite_basis(m, K)
    tensor = interaction_tensor(
        cb, cb, cb, spec, refine=bool(cfg["refine"]), workers=_workers(cfg)
    )
    flagged = tensor.flagged(float(cfg["flag_tol"]))
    payload = {
        "schema": SCHEMA,
        "kind": "interaction-tensor",
        "config": _echo(cfg, "d-tensor"),
        **tensor.to_json_dict(),
        "flagged": [list(t) for t in flagged],
    }
    summary = {
        "labels": len(tensor.labels_b),
        "max_abs": float(np.max(np.abs(tensor.values))),
        "max_error": tensor.max_error(),
        "flagged": len(flagged),
    }
    rot = [i for i, (k, _) in enumerate(tensor.labels_a) if k == 1]
    if m == 1 and rot:
        summary["rotation_self_max"] = float(
            max(np.max(np.abs(tensor.values[a, a, :])) for a in rot)
        )
    if cfg["check_projector"]:
        summary["projector"] = _projector_diagnostics(spec, m, int(cfg["seed"]))
    name = _dump_artifact(outdir, "tensor.json", payload)
    summary["artifacts"] = [name]
    return summary


def _cmd_evolve(cfg: dict, outdir: str) -> dict:
    model = cfg["model"]
    m = 2 if model == "burnett" else 1
    coeffs, k_needed = _parse_data(cfg["data"], m, cfg["K"], int(cfg["seed"]))
    K = k_needed if cfg["K"] is None else int(cfg["K"])
    if K < k_needed:
        raise ValidationError(f"data reaches level {k_needed} but K={K}")
    cb = composite_basis(m, K)
    labels = set(cb.labels)
    for lab in coeffs:
        if lab not in labels:
            raise ValidationError(f"coefficient label {lab} outside the level-{K} basis")
    taus = np.linspace(0.0, float(cfg["tau"]), int(cfg["steps"]))
    e0 = Expansion(model, cb, coeffs)
    summary: Dict[str, object] = {"model": model, "labels": cb.count, "tau_end": float(cfg["tau"])}
    if model == "stokes":
        traj = stokes_trajectory(e0, taus)
        summary["rates"] = _jsonable(
            {f"l{k}:{i}": v for (k, i), v in rate_check(traj, m)["rates"].items()}
        )
    elif model == "burnett":
        traj = burnett_trajectory(e0, taus)
        summary["rates"] = _jsonable(
            {f"l{k}:{i}": v for (k, i), v in rate_check(traj, m)["rates"].items()}
        )
    elif model == "nse":
        spec = GridSpec(L=float(cfg["L"]), n=int(cfg["n"]))
        if cfg["zero_tensor"]:
            tensor = _zero_tensor(cb, m, spec)
        elif cfg["tensor"]:
            tensor = _load_tensor(cfg["tensor"])
        else:
            tensor = interaction_tensor(cb, cb, cb, spec, workers=_workers(cfg))
        traj = nse_galerkin(
            e0, tensor, float(cfg["tau"]), rtol=float(cfg["rtol"]), n_out=int(cfg["steps"])
        )
        summary["duhamel_residual"] = traj.duhamel_residual
        summary["truncated"] = bool(traj.diagnostic.get("truncated", False))
        if cfg["check_linear"] or cfg["zero_tensor"]:
            lin = nse_galerkin(
                e0,
                _zero_tensor(cb, m, spec),
                float(cfg["tau"]),
                rtol=float(cfg["rtol"]),
                n_out=int(cfg["steps"]),
            )
            ref = stokes_trajectory(Expansion("stokes", cb, coeffs), taus)
            summary["stokes_dev"] = float(
                np.max(np.abs(lin.coeff_matrix() - ref.coeff_matrix()))
            )
    else:
        raise ValidationError(f"unknown model {model!r}")
    # the diagonal flows are exact, so the fit may use the whole trajectory;
    # the Galerkin run keeps the default window that skips the transient
    window = None if model == "nse" else (float(taus[0]), float(taus[-1]))
    rep = detect_resonance(traj, window=window)
    summary["resonance_status"] = rep.status
    summary["envelope_ok"] = traj.envelope_check()["ok"]
    arts = [
        _dump_text(outdir, "trajectory.csv", traj.to_csv()),
        _dump_artifact(
            outdir,
            "resonance.json",
            {
                "schema": SCHEMA,
                "kind": "resonance-report",
                "config": _echo(cfg, "evolve"),
                **rep.to_json_dict(),
            },
        ),
    ]
    summary["artifacts"] = arts
    return summary


def _cmd_nodal(cfg: dict, outdir: str) -> dict:
    model = cfg["model"]
    if model not in ("stokes", "burnett"):
        raise ValidationError("nodal pipeline drives the diagonal models only")
    m = 2 if model == "burnett" else 1
    flow = burnett_flow if model == "burnett" else stokes_flow
    coeffs, k_needed = _parse_data(cfg["data"], m, cfg["K"], int(cfg["seed"]))
    K = max(k_needed, 0 if cfg["K"] is None else int(cfg["K"]))
    cb = composite_basis(m, K)
    labels = set(cb.labels)
    for lab in coeffs:
        if lab not in labels:
            raise ValidationError(f"coefficient label {lab} outside the level-{K} basis")
    e0 = Expansion(model, cb, coeffs)
    tau_list = _as_float_list(cfg["taus"])
    if not tau_list:
        raise ValidationError("no evaluation times given")
    R, cell = float(cfg["R"]), float(cfg["cell"])

    kmin = min(k for k, _ in coeffs)
    ref_e = Expansion(model, cb, {lab: c for lab, c in coeffs.items() if lab[0] == kmin})
    ref_clouds = nodal_extract(ref_e, R=R, cell=cell)
    if cfg["component"] is None:
        comp = next(
            (i for i, c in enumerate(ref_clouds) if len(c)), None
        )
        if comp is None:
            raise ValidationError("reference zero set is empty in every component")
    else:
        comp = int(cfg["component"])
    arts = [_dump_text(outdir, f"nodal_ref_c{comp}.csv", _cloud_csv(ref_clouds[comp]))]

    distances = []
    for j, tau in enumerate(tau_list):
        state = flow(e0, tau)
        clouds = nodal_extract(state, R=R, cell=cell)
        for c in range(3):
            arts.append(
                _dump_text(outdir, f"nodal_tau{j}_c{c}.csv", _cloud_csv(clouds[c]))
            )
        distances.append(nodal_compare(clouds[comp], ref_clouds[comp]))

    traj_fn = burnett_trajectory if model == "burnett" else stokes_trajectory
    span = np.linspace(0.0, max(tau_list), int(cfg["steps"]))
    traj = traj_fn(e0, span)
    rep = detect_resonance(traj, window=(float(span[0]), float(span[-1])))
    verdict = unique_continuation_diagnostic(rep, distances, tol=cell)
    arts.append(
        _dump_artifact(
            outdir,
            "distances.json",
            {
                "schema": SCHEMA,
                "kind": "nodal-distances",
                "config": _echo(cfg, "nodal"),
                "component": comp,
                "taus": tau_list,
                "distances": distances,
                "resonance": rep.to_json_dict(),
                "diagnostic": verdict,
            },
        )
    )
    return {
        "component": comp,
        "distances": _jsonable(distances),
        "decreasing": bool(
            all(b <= a + 2 * cell for a, b in zip(distances, distances[1:]))
        ),
        "final_distance": distances[-1],
        "resonance_status": rep.status,
        "verdict": verdict["verdict"],
        "artifacts": arts,
    }


def _terms_sampler(terms: List[dict]):
    parsed = []
    for t in terms:
        ex = tuple(int(v) for v in t["x"])
        if len(ex) != 3 or any(v < 0 for v in ex):
            raise ValidationError(f"bad spatial exponents {t['x']!r}")
        et = int(t.get("t", 0))
        if et < 0:
            raise ValidationError("temporal exponent must be >= 0")
        parsed.append((ex, et, Fraction(str(t["c"]))))
    if not parsed:
        raise ValidationError("empty term list")

    def sampler(x, t):
        tot = Fraction(0)
        for ex, et, co in parsed:
            term = co
            for xi, e in zip(x, ex):
                if e:
                    term *= Fraction(xi) ** e
            if et:
                term *= Fraction(t) ** et
            tot += term
        return float(tot)

    return sampler


def _cmd_classify(cfg: dict, outdir: str) -> dict:
    if cfg["suite"]:
        if cfg["suite"] != "synthetic":
            raise ValidationError(f"unknown suite {cfg['suite']!r}")
        cases = []
        all_exact = True
        for M in range(1, 5):
            for Kt in range(1, 5):
                terms = [
                    {"x": [M, 0, 0], "t": 0, "c": 1},
                    {"x": [0, 0, 0], "t": Kt, "c": -((-1) ** Kt)},
                ]
                zt = classify_zero(
                    _terms_sampler(terms),
                    max_order=int(cfg["max_order"]),
                    delta=float(cfg["delta"]),
                    threshold=float(cfg["threshold"]),
                )
                exact = (
                    zt.status == "classified"
                    and zt.M == M
                    and zt.K == Kt
                    and zt.gamma == Fraction(Kt, M)
                )
                all_exact = all_exact and exact
                cases.append({"M": M, "K": Kt, "result": zt.to_json_dict(), "exact": exact})
        name = _dump_artifact(
            outdir,
            "classify_suite.json",
            {"schema": SCHEMA, "kind": "zero-type-suite", "config": _echo(cfg, "classify"), "cases": cases},
        )
        if not all_exact:
            raise ValidationError("synthetic zero-type suite disagreed with closed forms")
        return {"cases": len(cases), "all_exact": True, "artifacts": [name]}

    if cfg["terms_file"]:
        with open(cfg["terms_file"]) as fh:
            terms = json.load(fh)
    elif cfg["terms"]:
        terms = json.loads(cfg["terms"]) if isinstance(cfg["terms"], str) else cfg["terms"]
    else:
        raise ValidationError("provide --terms, --terms-file, or --suite synthetic")
    if not isinstance(terms, list):
        raise ValidationError("terms must be a JSON list of monomials")
    zt = classify_zero(
        _terms_sampler(terms),
        max_order=int(cfg["max_order"]),
        delta=float(cfg["delta"]),
        threshold=float(cfg["threshold"]),
    )
    name = _dump_artifact(
        outdir,
        "zerotype.json",
        {"schema": SCHEMA, "kind": "zero-type", "config": _echo(cfg, "classify"), **zt.to_json_dict()},
    )
    out = {"status": zt.status, "artifacts": [name]}
    out["M"] = zt.M
    out["K"] = zt.K
    out["gamma"] = _jsonable(zt.gamma)
    return out


def _cmd_verify(cfg: dict, outdir: str) -> dict:
    m = int(cfg["m"])
    spec = GridSpec(L=float(cfg["L"]), n=int(cfg["n"]))
    levels = _as_int_list(cfg["level"])
    results = []
    arts = []
    worst = 0.0
    truncated_any = False
    for k in levels:
        fields = fixture(m, k)
        idx = int(cfg["field_index"])
        if not 0 <= idx < len(fields):
            raise ValidationError(f"field index {idx} outside fixture level {k}")
        t_end = cfg["t_end"]
        traj = semigroup_verify(
            fields[idx],
            m,
            t_end=None if t_end is None else float(t_end),
            spec=spec,
            n_tau=int(cfg["n_tau"]),
            workers=_workers(cfg),
        )
        rc = rate_check(traj, m)
        worst = max(worst, rc["max_rel_err"])
        truncated_any = truncated_any or bool(traj.diagnostic.get("truncated", False))
        arts.append(_dump_text(outdir, f"verify_m{m}_l{k}.csv", traj.to_csv()))
        results.append(
            {
                "level": k,
                "field_index": idx,
                "n_tau": len(traj.taus),
                "max_rel_err": rc["max_rel_err"],
                "rates": {f"l{a}:{b}": v for (a, b), v in rc["rates"].items()},
                "diagnostic": traj.diagnostic,
            }
        )
    arts.append(
        _dump_artifact(
            outdir,
            f"verify_m{m}.json",
            {"schema": SCHEMA, "kind": "semigroup-verify", "config": _echo(cfg, "verify"), "results": results},
        )
    )
    return {
        "m": m,
        "levels": levels,
        "max_rel_rate_err": worst,
        "truncated": truncated_any,
        "artifacts": arts,
    }


HANDLERS = {
    "basis": _cmd_basis,
    "eig-check": _cmd_eig_check,
    "biortho": _cmd_biortho,
    "solenoidal": _cmd_solenoidal,
    "kernel": _cmd_kernel,
    "wkbj": _cmd_wkbj,
    "d-tensor": _cmd_d_tensor,
    "evolve": _cmd_evolve,
    "nodal": _cmd_nodal,
    "classify": _cmd_classify,
    "verify": _cmd_verify,
}


def _echo(cfg: dict, command: str) -> dict:
    return RunConfig(command, dict(cfg)).to_json_dict()


# -- argument parsing ---------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with the conventional code 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(64, f"{self.prog}: error: {message}\n")


def _bool_flag(sub, name: str, help_on: str):
    sub.add_argument(name, action="store_true", default=argparse.SUPPRESS, help=help_on)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hermflow", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name: str, help_text: str):
        sp = subs.add_parser(name, help=help_text)
        sp.add_argument("--config", default=argparse.SUPPRESS, help="flat JSON config file; flags override it")
        sp.add_argument("--outdir", default=argparse.SUPPRESS, help="artifact directory (HERMFLOW_OUTDIR overrides the default)")
        sp.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="worker cap (default: available cores)")
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for any randomized data")
        return sp

    sp = add("basis", "enumerate eigenfunction levels with exact eigen data")
    sp.add_argument("--m", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--N", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--max-level", dest="max_level", type=int, default=argparse.SUPPRESS)

    sp = add("eig-check", "verify the eigen-relation exactly up to a level")
    sp.add_argument("--m", type=int, action="append", default=argparse.SUPPRESS)
    sp.add_argument("--N", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--max-level", dest="max_level", type=int, default=argparse.SUPPRESS)

    sp = add("biortho", "verify the dual pairing is beta! times identity")
    sp.add_argument("--m", type=int, action="append", default=argparse.SUPPRESS)
    sp.add_argument("--N", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--max-level", dest="max_level", type=int, default=argparse.SUPPRESS)

    sp = add("solenoidal", "catalog and check divergence-free vector bases")
    sp.add_argument("--m", type=int, action="append", default=argparse.SUPPRESS)
    sp.add_argument("--N", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--kind", choices=["fixture", "kernel", "composite"], default=argparse.SUPPRESS)
    sp.add_argument("--level", type=int, default=argparse.SUPPRESS, help="level for --kind kernel")
    sp.add_argument("--K", type=int, default=argparse.SUPPRESS, help="truncation for --kind composite")

    sp = add("kernel", "tabulate the radial kernel profile to CSV")
    sp.add_argument("--m", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--N", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--r-max", dest="r_max", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--dr", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--tol", type=float, default=argparse.SUPPRESS)

    sp = add("wkbj", "closed-form decay constants, optionally fit to the kernel")
    sp.add_argument("--m", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--N", type=int, default=argparse.SUPPRESS)
    _bool_flag(sp, "--fit", "tabulate the kernel and fit its envelope")
    sp.add_argument("--r-max", dest="r_max", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--dr", type=float, default=argparse.SUPPRESS)

    sp = add("d-tensor", "projected convection couplings of the composite basis")
    sp.add_argument("--m", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--K", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--L", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--n", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--no-refine", dest="refine", action="store_false", default=argparse.SUPPRESS)
    sp.add_argument("--no-check-projector", dest="check_projector", action="store_false", default=argparse.SUPPRESS)
    sp.add_argument("--flag-tol", dest="flag_tol", type=float, default=argparse.SUPPRESS)

    sp = add("evolve", "coefficient dynamics: exact diagonal flows or Galerkin")
    sp.add_argument("--model", choices=["stokes", "nse", "burnett"], default=argparse.SUPPRESS)
    sp.add_argument("--data", default=argparse.SUPPRESS, help="fixture:k:i | l1:0=c,... | demo:nodal | demo:small | file:PATH")
    sp.add_argument("--tau", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--steps", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--K", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--rtol", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--L", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--n", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--tensor", default=argparse.SUPPRESS, help="interaction-tensor JSON to reuse")
    _bool_flag(sp, "--zero-tensor", "integrate with all couplings zeroed")
    _bool_flag(sp, "--check-linear", "also compare the zero-coupling run to the exact flow")

    sp = add("nodal", "evolve data, extract zero sets, track distance to the ambient plane")
    sp.add_argument("--model", choices=["stokes", "burnett"], default=argparse.SUPPRESS)
    sp.add_argument("--data", default=argparse.SUPPRESS)
    sp.add_argument("--taus", default=argparse.SUPPRESS, help="comma-separated evaluation times")
    sp.add_argument("--R", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--cell", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--component", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--K", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--steps", type=int, default=argparse.SUPPRESS)

    sp = add("classify", "vanishing orders (M, K, gamma) of a space-time zero")
    sp.add_argument("--terms", default=argparse.SUPPRESS, help='JSON list like [{"x":[2,0,0],"t":0,"c":1},...]')
    sp.add_argument("--terms-file", dest="terms_file", default=argparse.SUPPRESS)
    sp.add_argument("--suite", default=argparse.SUPPRESS, help="synthetic: sweep x^M - (-t)^K for M,K <= 4")
    sp.add_argument("--max-order", dest="max_order", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--delta", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--threshold", type=float, default=argparse.SUPPRESS)

    sp = add("verify", "independent semigroup cross-check of the diagonal rates")
    sp.add_argument("--m", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--level", type=int, action="append", default=argparse.SUPPRESS)
    sp.add_argument("--field-index", dest="field_index", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--t-end", dest="t_end", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--L", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--n", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--n-tau", dest="n_tau", type=int, default=argparse.SUPPRESS)

    return parser


def _resolve(command: str, ns: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[command])
    given = {k: v for k, v in vars(ns).items() if k != "command"}
    path = given.pop("config", None)
    if path:
        with open(path) as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise ValidationError("config file must hold a flat JSON object")
        unknown = sorted(set(file_cfg) - set(cfg))
        if unknown:
            raise ValidationError(f"unknown config keys: {unknown}")
        cfg.update(file_cfg)
    env = os.environ.get("HERMFLOW_OUTDIR")
    if env:
        cfg["outdir"] = env
    cfg.update(given)
    return cfg


def run(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if not getattr(ns, "command", None):
        parser.error("a subcommand is required")
    try:
        cfg = _resolve(ns.command, ns)
        outdir = str(cfg["outdir"])
        os.makedirs(outdir, exist_ok=True)
        summary = HANDLERS[ns.command](cfg, outdir)
        line = {
            "schema": SCHEMA,
            "command": ns.command,
            "ok": True,
            "config": _echo(cfg, ns.command),
            **summary,
        }
        print(json.dumps(_jsonable(line), sort_keys=True))
        return 0
    except ValidationError as exc:
        print(
            json.dumps(
                {
                    "schema": SCHEMA,
                    "command": ns.command,
                    "ok": False,
                    "error": "validation",
                    "message": str(exc),
                },
                sort_keys=True,
            )
        )
        print(f"hermflow {ns.command}: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(
            json.dumps(
                {
                    "schema": SCHEMA,
                    "command": ns.command,
                    "ok": False,
                    "error": "non-convergence",
                    "message": str(exc),
                    "achieved": exc.achieved,
                },
                sort_keys=True,
            )
        )
        print(f"hermflow {ns.command}: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        # malformed user input (bad JSON, missing files, unparsable numbers)
        print(
            json.dumps(
                {
                    "schema": SCHEMA,
                    "command": ns.command,
                    "ok": False,
                    "error": "validation",
                    "message": str(exc),
                },
                sort_keys=True,
            )
        )
        print(f"hermflow {ns.command}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
