"""Configuration-driven experiment runner.

Commands:

    nopolab list-presets
    nopolab preset NAME [--seed N] [--out DIR] [--reduced] [--physical-units]
    nopolab analytic NAME [--out DIR]
    nopolab run CONFIG [--out DIR] [--seed N]

Configs are TOML files (or JSON; a previously written run manifest is also
accepted and reproduces the run bit-for-bit).  Every run writes a
manifest.json (config echo, seed, versions, fault counts) next to one CSV
per requested output; CSVs start with a `#` metadata block.  Exit codes:
0 ok, 2 configuration or domain error, 3 numerical fault budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib as _toml
except ImportError:  # python < 3.11
    import tomli as _toml

from . import __version__, epr, oracle, presets
from .core import POSITIVE_P, WIGNER, PhysicalParams, derive_scaled, physical_from_scaled
from .errors import (
    EstimationError,
    FaultBudgetError,
    MissingRecordError,
    NopolabError,
    ParameterError,
    ScalingError,
    ThresholdDomainError,
)
from .sde import IntegratorConfig, ObservablesPlan, run_critical_ensemble, run_ensemble
from .spectra import intracavity_moments, nonlinear_residual, squeezing_spectra, triple_spectrum

SCHEMA_VERSION = 1

_SIM_OUTPUTS = {"spectra", "nl_spectrum", "moments", "triple", "epr"}
_ANALYTIC_OUTPUTS = {
    "analytic_zero_freq", "analytic_total_moment", "analytic_nl_moment",
    "analytic_epr", "analytic_critical_squeeze", "analytic_spectrum",
}


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

def load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ParameterError(f"config file not found: {path}")
    if path.suffix == ".json":
        with open(path, "rb") as f:
            data = json.load(f)
        if "config" in data and "schema_version" in data:
            return data["config"]
        return data
    try:
        with open(path, "rb") as f:
            return _toml.load(f)
    except _toml.TOMLDecodeError as exc:
        raise ParameterError(f"{path}: invalid TOML: {exc}") from exc


def _require(cond: bool, msg: str):
    if not cond:
        raise ParameterError(msg)


def resolve_params(cfg: dict) -> PhysicalParams:
    params = cfg.get("params")
    _require(isinstance(params, dict), "missing [params] section")
    scaled_keys = {"g2", "gamma_r", "mu"}
    has_scaled = scaled_keys <= set(params)
    has_physical = "physical" in params
    _require(has_scaled != has_physical,
             "[params] needs exactly one parameterization: g2/gamma_r/mu or [params.physical]")
    if has_scaled:
        return physical_from_scaled(float(params["g2"]), float(params["gamma_r"]),
                                    float(params["mu"]))
    ph = params["physical"]
    for key in ("gamma0", "gamma", "chi", "drive"):
        _require(key in ph, f"[params.physical] missing field {key!r}")
    return PhysicalParams(gamma0=float(ph["gamma0"]), gamma=float(ph["gamma"]),
                          chi=float(ph["chi"]), drive=complex(ph["drive"]))


def resolve_integrator(cfg: dict, seed: int) -> IntegratorConfig:
    integ = dict(cfg.get("integrator", {}))
    integ.setdefault("seed", seed)
    known = {f.name for f in IntegratorConfig.__dataclass_fields__.values()}
    unknown = set(integ) - known
    _require(not unknown, f"[integrator] has unknown fields: {sorted(unknown)}")
    return IntegratorConfig(**integ)


def _grid(spec, what: str) -> np.ndarray:
    if isinstance(spec, (list, tuple)) and len(spec) == 3 and isinstance(spec[2], int):
        return np.linspace(float(spec[0]), float(spec[1]), spec[2])
    if isinstance(spec, (list, tuple)):
        return np.asarray([float(x) for x in spec])
    raise ParameterError(f"{what} must be [start, stop, num] or an explicit list")


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, meta: dict, header: list[str], rows) -> None:
    lines = [f"# {k} = {_fmt(v)}" for k, v in meta.items()]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def _base_meta(cfg: dict, extra: dict | None = None) -> dict:
    exp = cfg["experiment"]
    meta = {
        "schema_version": SCHEMA_VERSION,
        "generator": f"nopolab {__version__}",
        "name": exp.get("name", "run"),
        "seed": exp.get("seed", 0),
    }
    if "params" in cfg:
        p = cfg["params"]
        if "g2" in p:
            meta.update(g2=p["g2"], gamma_r=p["gamma_r"], mu=p["mu"])
    meta.update(extra or {})
    return meta


# ---------------------------------------------------------------------------
# Analytic artifact writers
# ---------------------------------------------------------------------------

def _zero_freq_quantity(quantity: str, mu: float, gamma_r: float, g2: float) -> float:
    v0, vpi2 = oracle.spectrum_plusp(mu, gamma_r, g2, 0.0)
    if quantity == "vpi2":
        return vpi2
    if quantity == "v0":
        return v0
    if quantity == "heisenberg":
        return v0 * vpi2
    if quantity == "inference":
        return epr.inference_variance(v0, vpi2)
    raise ParameterError(f"unknown zero-frequency quantity {quantity!r}")


def _run_analytic(cfg: dict, outdir: Path) -> list[str]:
    artifacts = []
    outputs = cfg["experiment"]["outputs"]
    ana = cfg.get("analytic", {})
    for output in outputs:
        _require(output in _ANALYTIC_OUTPUTS, f"unknown analytic output {output!r}")
        fname = f"{output}.csv"
        fpath = outdir / fname

        if output == "analytic_zero_freq":
            quantity = ana.get("quantity", "vpi2")
            g2 = float(ana["g2"])
            grs = [float(x) for x in ana["gamma_r_list"]]
            mus = _grid(ana["mu_grid"], "mu_grid")
            header = ["mu"] + [f"{quantity}_gr{g:g}" for g in grs]
            rows = [[mu] + [_zero_freq_quantity(quantity, mu, gr, g2) for gr in grs]
                    for mu in mus]
            write_csv(fpath, _base_meta(cfg, {"quantity": quantity, "g2": g2}), header, rows)

        elif output == "analytic_total_moment":
            g2 = float(ana["g2"])
            grs = [float(x) for x in ana["gamma_r_list"]]
            mus = _grid(ana["mu_grid"], "mu_grid")
            header = ["mu"]
            for gr in grs:
                header += [f"total_pp_gr{gr:g}", f"total_w_gr{gr:g}"]
            rows = []
            for mu in mus:
                row = [mu]
                for gr in grs:
                    row.append(oracle.total_squeeze_moment(mu, gr, g2, POSITIVE_P))
                    row.append(oracle.total_squeeze_moment(mu, gr, g2, WIGNER))
                rows.append(row)
            write_csv(fpath, _base_meta(cfg, {"g2": g2}), header, rows)

        elif output == "analytic_nl_moment":
            g2 = float(ana["g2"])
            grs = [float(x) for x in ana["gamma_r_list"]]
            mus = _grid(ana["mu_grid"], "mu_grid")
            header = ["mu"]
            for gr in grs:
                header += [f"nl_pp_gr{gr:g}", f"nl_w_gr{gr:g}"]
            rows = []
            for mu in mus:
                lin = 1.0 / (1.0 + mu)
                row = [mu]
                for gr in grs:
                    row.append(oracle.total_squeeze_moment(mu, gr, g2, POSITIVE_P) - lin)
                    row.append(oracle.total_squeeze_moment(mu, gr, g2, WIGNER) - lin)
                rows.append(row)
            write_csv(fpath, _base_meta(cfg, {"g2": g2}), header, rows)

        elif output == "analytic_epr":
            g2 = float(ana["g2"])
            gr = float(ana["gamma_r"])
            mus = _grid(ana["mu_grid"], "mu_grid")
            header = ["mu", "v0", "vpi2", "inference", "epr_product",
                      "heisenberg", "epr_demonstrated", "entangled_duan_simon"]
            rows = []
            for mu in mus:
                v0, vpi2 = oracle.spectrum_plusp(mu, gr, g2, 0.0)
                d2 = epr.inference_variance(v0, vpi2)
                rows.append([mu, v0, vpi2, d2, d2 * d2, v0 * vpi2,
                             epr.epr_flag(d2, d2), epr.duan_simon_flag(vpi2)])
            write_csv(fpath, _base_meta(cfg, {"g2": g2, "gamma_r": gr}), header, rows)

        elif output == "analytic_critical_squeeze":
            g = float(ana["g"])
            grs = [float(x) for x in ana["gamma_r_list"]]
            etas = _grid(ana["eta_grid"], "eta_grid")
            header = ["eta"] + [f"yy_gr{gr:g}" for gr in grs]
            rows = [[eta] + [oracle.critical_squeeze_moment(eta, gr, g) for gr in grs]
                    for eta in etas]
            meta = _base_meta(cfg, {"g": g})
            for gr in grs:
                vals = [oracle.critical_squeeze_moment(eta, gr, g) for eta in etas]
                meta[f"argmin_eta_gr{gr:g}"] = float(etas[int(np.argmin(vals))])
            write_csv(fpath, meta, header, rows)

        elif output == "analytic_spectrum":
            g2 = float(ana["g2"])
            gr = float(ana["gamma_r"])
            mu = float(ana["mu"])
            omegas = _grid(ana.get("omega_grid", [0.0, 10.0, 201]), "omega_grid")
            v0, vpi2 = oracle.spectrum_plusp(mu, gr, g2, omegas)
            vw = oracle.spectrum_wigner(mu, gr, g2, omegas)
            header = ["omega", "v0_pp", "vpi2_pp", "vpi2_w"]
            rows = [[w, a, b, c] for w, a, b, c in zip(omegas, v0, vpi2, vw)]
            write_csv(fpath, _base_meta(cfg, {"g2": g2, "gamma_r": gr, "mu": mu}), header, rows)

        artifacts.append(fname)
    return artifacts


# ---------------------------------------------------------------------------
# Simulation artifact writers
# ---------------------------------------------------------------------------

def _run_simulation(cfg: dict, outdir: Path, omega_scale: float) -> tuple[list[str], dict]:
    exp = cfg["experiment"]
    representation = exp["representation"]
    _require(representation in (POSITIVE_P, WIGNER),
             f"unknown representation {representation!r}")
    outputs = exp["outputs"]
    for output in outputs:
        _require(output in _SIM_OUTPUTS, f"unknown simulation output {output!r}")
    p = resolve_params(cfg)
    sp = derive_scaled(p)
    icfg = resolve_integrator(cfg, exp.get("seed", 0))
    spec_cfg = cfg.get("spectra", {})
    triple_cfg = cfg.get("triple", {})
    want_spectral = bool(_SIM_OUTPUTS.intersection(outputs) - {"moments"})
    plan = ObservablesPlan(
        t_seg=float(spec_cfg.get("t_seg", 100.0)),
        omega_max=float(spec_cfg.get("omega_max", 10.0)),
        spectra=want_spectral,
        output_spectra=representation == WIGNER and bool({"spectra", "nl_spectrum", "epr"} & set(outputs)),
        moments="moments" in outputs,
        triple_kmax=int(triple_cfg.get("k_max", 0)) if "triple" in outputs else 0,
    )
    ens = run_ensemble(p, representation, icfg, plan)
    stats = {"n_traj": icfg.n_traj, "fault_count": int(np.sum(ens.faulted)),
             "n_segments": ens.n_segments}
    artifacts = []
    thetas = tuple(float(t) for t in spec_cfg.get("thetas", ()))
    est = None
    if {"spectra", "nl_spectrum", "epr"} & set(outputs):
        est = squeezing_spectra(ens, thetas=thetas)

    for output in outputs:
        fname = f"{output}.csv"
        fpath = outdir / fname
        if output == "spectra":
            header = ["omega", "v0", "v0_se", "vpi2", "vpi2_se"]
            cols = [est.omega * omega_scale, est.v0, est.v0_se, est.vpi2, est.vpi2_se]
            for th in thetas:
                header += [f"v_theta{th:g}", f"v_theta{th:g}_se"]
                cols += [est.theta_spectra[th][0], est.theta_spectra[th][1]]
            rows = np.column_stack(cols)
            write_csv(fpath, _base_meta(cfg, {"method": est.method, "t_seg": est.t_seg,
                                              "n_segments": est.n_segments}), header, rows)
        elif output == "nl_spectrum":
            res = nonlinear_residual(est, sp.mu)
            if representation == POSITIVE_P:
                v_nl = oracle.spectrum_plusp(sp.mu, sp.gamma_r, sp.g2, est.omega)[1]
            else:
                v_nl = oracle.spectrum_wigner(sp.mu, sp.gamma_r, sp.g2, est.omega)
            v_nl = v_nl - oracle.linear_spectra(sp.mu, est.omega)[1]
            rows = np.column_stack([est.omega * omega_scale, res.values, res.se, v_nl])
            write_csv(fpath, _base_meta(cfg, {"method": est.method}),
                      ["omega", "v_nl_sim", "v_nl_sim_se", "v_nl_analytic"], rows)
        elif output == "moments":
            mom = intracavity_moments(ens)
            ms = (oracle.moments_plusp if representation == POSITIVE_P else oracle.moments_wigner)(
                sp.mu, sp.gamma_r)
            total = oracle.total_squeeze_moment(sp.mu, sp.gamma_r, sp.g2, representation)
            ref = {"x0_2": ms.x0_2, "xx1": ms.xx1, "yy1": ms.yy1,
                   "triple": ms.triple, "total_squeeze": total}
            rows = []
            for key, target in ref.items():
                val, se = getattr(mom, key)
                z = (val - target) / se if se > 0 else math.nan
                rows.append([key, val, se, target, z])
            write_csv(fpath, _base_meta(cfg, {"n_traj_ok": mom.n_traj}),
                      ["moment", "value", "se", "analytic", "z"], rows)
        elif output == "triple":
            trip = triple_spectrum(ens)
            rows = []
            for i, w1 in enumerate(trip.omega1):
                for j, w2 in enumerate(trip.omega2):
                    if representation == POSITIVE_P:
                        ref = sp.g ** 4 * oracle.triple_plusp(sp.mu, sp.gamma_r, w1, w2)
                    else:
                        ref = oracle.triple_wigner(sp.mu, sp.gamma_r, w1, w2, sp.g)
                    val = trip.values[i, j]
                    rows.append([w1 * omega_scale, w2 * omega_scale, val.real, val.imag,
                                 trip.se[i, j], ref.real, ref.imag])
            write_csv(fpath, _base_meta(cfg, {"conj_asymmetry": trip.conj_asymmetry}),
                      ["omega1", "omega2", "re_sim", "im_sim", "se", "re_analytic", "im_analytic"],
                      rows)
        elif output == "epr":
            rep = epr.epr_report(est)
            rows = np.column_stack([
                rep.omega * omega_scale, rep.v0, rep.vpi2, rep.inference_x,
                rep.epr_product, rep.heisenberg_product, rep.c_x,
                rep.epr_demonstrated, rep.entangled_duan_simon,
            ])
            write_csv(fpath, _base_meta(cfg, {"method": est.method}),
                      ["omega", "v0", "vpi2", "inference", "epr_product", "heisenberg",
                       "c_x", "epr_demonstrated", "entangled_duan_simon"],
                      ([r[0], r[1], r[2], r[3], r[4], r[5], r[6], bool(r[7]), bool(r[8])]
                       for r in rows))
        artifacts.append(fname)
    return artifacts, stats


def _run_critical(cfg: dict, outdir: Path) -> tuple[list[str], dict]:
    exp = cfg["experiment"]
    for output in exp["outputs"]:
        _require(output == "critical_r2", f"unknown critical output {output!r}")
    crit = cfg.get("critical", {})
    etas = _grid(crit.get("eta_grid", [0.0]), "eta_grid")
    icfg = resolve_integrator(cfg, exp.get("seed", 0))
    rows = []
    fault_count = 0
    for i, eta in enumerate(etas):
        # distinct stream block per grid point
        cfg_i = IntegratorConfig(**{**{f: getattr(icfg, f) for f in icfg.__dataclass_fields__},
                                    "seed": icfg.seed + 7919 * i})
        res = run_critical_ensemble(float(eta), cfg_i)
        fault_count += int(np.sum(res.faulted))
        ref = oracle.critical_xx(float(eta))
        z = (res.r2_mean - ref) / res.r2_se if res.r2_se > 0 else math.nan
        rows.append([eta, res.r2_mean, res.r2_se, ref, z])
    fname = "critical_r2.csv"
    write_csv(outdir / fname, _base_meta(cfg), ["eta", "r2", "r2_se", "r2_oracle", "z"], rows)
    return [fname], {"n_traj": icfg.n_traj * len(etas), "fault_count": fault_count}


# ---------------------------------------------------------------------------
# Experiment driver
# ---------------------------------------------------------------------------

def run_experiment(cfg: dict, outdir: str | Path, physical_units: bool = False) -> Path:
    """Execute one experiment config; returns the manifest path."""
    _require("experiment" in cfg, "missing [experiment] section")
    exp = cfg["experiment"]
    _require("outputs" in exp and exp["outputs"], "[experiment] must list outputs")
    representation = exp.get("representation", "analytic")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    omega_scale = 1.0
    if physical_units:
        params = cfg.get("params", {})
        omega_scale = float(params.get("physical", {}).get("gamma", 1.0))

    stats: dict = {}
    if representation == "analytic":
        artifacts = _run_analytic(cfg, outdir)
    elif representation == "critical":
        artifacts, stats = _run_critical(cfg, outdir)
    else:
        artifacts, stats = _run_simulation(cfg, outdir, omega_scale)

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "generator": {"name": "nopolab", "version": __version__},
        "seed": exp.get("seed", 0),
        "config": cfg,
        "artifacts": artifacts,
        **stats,
    }
    mpath = outdir / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return mpath


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _cmd_list_presets(_args) -> int:
    for row in presets.catalog():
        variants = " [reduced available]" if row["has_reduced"] else ""
        print(f"{row['name']:<20} {row['kind']:<10} {row['figure']}{variants}")
        print(f"{'':<20} {row['description']}")
        print(f"{'':<20} params: {json.dumps(row['params'], sort_keys=True)}")
    return 0


def _execute(cfg, args) -> int:
    if getattr(args, "seed", None) is not None:
        cfg.setdefault("experiment", {})["seed"] = args.seed
    mpath = run_experiment(cfg, args.out, physical_units=getattr(args, "physical_units", False))
    print(f"wrote {mpath}")
    return 0


def _cmd_preset(args) -> int:
    cfg = presets.get_preset(args.name, reduced=args.reduced)
    return _execute(cfg, args)


def _cmd_analytic(args) -> int:
    cfg = presets.get_preset(args.name, reduced=False)
    _require(cfg["experiment"]["representation"] == "analytic",
             f"preset {args.name!r} is not analytic-only; use `preset`")
    return _execute(cfg, args)


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    return _execute(cfg, args)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nopolab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list-presets", help="print the preset catalog")

    pp = sub.add_parser("preset", help="run a named preset")
    pp.add_argument("name")
    pp.add_argument("--seed", type=int, default=None)
    pp.add_argument("--out", default="out")
    pp.add_argument("--reduced", action="store_true", help="CI-scale protocol variant")
    pp.add_argument("--physical-units", action="store_true")

    pa = sub.add_parser("analytic", help="run an analytic-only preset")
    pa.add_argument("name")
    pa.add_argument("--out", default="out")

    pr = sub.add_parser("run", help="run an experiment config file (TOML/JSON/manifest)")
    pr.add_argument("config")
    pr.add_argument("--seed", type=int, default=None)
    pr.add_argument("--out", default="out")
    pr.add_argument("--physical-units", action="store_true")

    args = parser.parse_args(argv)
    handlers = {"list-presets": _cmd_list_presets, "preset": _cmd_preset,
                "analytic": _cmd_analytic, "run": _cmd_run}
    try:
        return handlers[args.command](args)
    except FaultBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ParameterError, ThresholdDomainError, ScalingError, EstimationError,
            MissingRecordError, NopolabError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
