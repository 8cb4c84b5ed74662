"""Built-in experiment presets.

Each preset is a complete experiment configuration (same schema as the files
accepted by `nopolab run`) reproducing one reference curve of the source
study, with the exact parameters quoted from its caption.  Simulation
presets carry a `reduced` override block selected by --reduced: fewer
trajectories and a shorter window for CI-scale runs.
"""

from __future__ import annotations

import copy

from .errors import ParameterError

_GR_LADDER = [1e-3, 1e-2, 1e-1, 1.0, 10.0]


def _sim(name, figure, description, g2, gamma_r, mu, outputs, *, t_burn,
         t_record=10000.0, n_traj=2000, dt=1e-3, seed, companion=True,
         representation="positive_p", scheme="midpoint", spectra=None,
         triple_kmax=0, reduced=None):
    cfg = {
        "experiment": {
            "name": name,
            "representation": representation,
            "seed": seed,
            "outputs": list(outputs),
            "figure": figure,
            "description": description,
        },
        "params": {"g2": g2, "gamma_r": gamma_r, "mu": mu},
        "integrator": {
            "dt": dt,
            "t_burn": t_burn,
            "t_record": t_record,
            "n_traj": n_traj,
            "scheme": scheme,
            "record_dt": 0.05,
            "batch_size": 500,
            "with_linear_companion": companion and representation == "positive_p",
        },
        "spectra": spectra or {"t_seg": 100.0, "omega_max": 10.0},
    }
    if triple_kmax:
        cfg["triple"] = {"k_max": triple_kmax}
    if reduced:
        cfg["reduced"] = reduced
    return cfg


def _analytic(name, figure, description, outputs, analytic, seed=0):
    return {
        "experiment": {
            "name": name,
            "representation": "analytic",
            "seed": seed,
            "outputs": list(outputs),
            "figure": figure,
            "description": description,
        },
        "analytic": analytic,
    }


def _build_presets():
    p = {}

    p["fig_totalmoment"] = _analytic(
        "fig_totalmoment",
        "total squeezing/entanglement moment vs drive (g^2=0.001, gamma_r=0.5)",
        "intracavity <Y1 Y1+> vs mu for both representations",
        ["analytic_total_moment"],
        {"g2": 0.001, "gamma_r_list": [0.5], "mu_grid": [0.0, 0.995, 200]},
    )
    p["fig_nlmoment"] = _analytic(
        "fig_nlmoment",
        "nonlinear correction to the squeezing moment vs drive (g^2=0.001, gamma_r=0.1,1,10)",
        "order-g^2 part of <Y1 Y1+>, positive-P vs semiclassical",
        ["analytic_nl_moment"],
        {"g2": 0.001, "gamma_r_list": [0.1, 1.0, 10.0], "mu_grid": [0.0, 0.99, 199]},
    )
    p["fig_optsqueeze"] = _analytic(
        "fig_optsqueeze",
        "optimum squeezing: V^{pi/2}(0) vs drive (g^2=0.001, gamma_r=1e-3..10)",
        "zero-frequency squeezed spectrum vs mu for the gamma_r ladder",
        ["analytic_zero_freq"],
        {"quantity": "vpi2", "g2": 0.001, "gamma_r_list": list(_GR_LADDER),
         "mu_grid": [0.0, 0.995, 200]},
    )
    p["fig_unsqueezed"] = _analytic(
        "fig_unsqueezed",
        "complementary (unsqueezed) spectrum V^0(0) vs drive (g^2=0.001, gamma_r=1e-3..10)",
        "zero-frequency unsqueezed spectrum vs mu for the gamma_r ladder",
        ["analytic_zero_freq"],
        {"quantity": "v0", "g2": 0.001, "gamma_r_list": list(_GR_LADDER),
         "mu_grid": [0.0, 0.98, 197]},
    )
    p["fig_heisenberg"] = _analytic(
        "fig_heisenberg",
        "uncertainty product V^0 V^{pi/2}(0) vs drive (g^2=0.001, gamma_r=1e-3..10)",
        "zero-frequency nonlinear uncertainty product vs mu",
        ["analytic_zero_freq"],
        {"quantity": "heisenberg", "g2": 0.001, "gamma_r_list": list(_GR_LADDER),
         "mu_grid": [0.0, 0.98, 197]},
    )
    p["fig_inference"] = _analytic(
        "fig_inference",
        "inferred quadrature uncertainty vs drive (g^2=0.001, gamma_r=1e-3..10)",
        "linear-estimate inference variance at zero frequency vs mu",
        ["analytic_zero_freq"],
        {"quantity": "inference", "g2": 0.001, "gamma_r_list": list(_GR_LADDER),
         "mu_grid": [0.0, 0.95, 191]},
    )

    p["fig_mu05"] = _sim(
        "fig_mu05",
        "nonlinear squeezing spectrum (g^2=0.005, gamma_r=1, mu=0.5)",
        "differenced nonlinear residual of V^{pi/2} vs the order-g^2 result",
        0.005, 1.0, 0.5, ["nl_spectrum", "spectra"],
        t_burn=100.0, seed=20240501, scheme="euler",
        reduced={"integrator": {"n_traj": 500, "t_record": 2500.0}},
    )
    p["fig_mu09"] = _sim(
        "fig_mu09",
        "nonlinear squeezing spectrum (g^2=0.001, gamma_r=0.5, mu=0.9)",
        "differenced nonlinear residual of V^{pi/2} vs the order-g^2 result",
        0.001, 0.5, 0.9, ["nl_spectrum", "spectra"],
        t_burn=500.0, seed=20240502, scheme="euler",
        reduced={"integrator": {"n_traj": 400, "t_record": 2000.0}},
    )
    p["fig_mu093"] = _sim(
        "fig_mu093",
        "nonlinear squeezing spectrum (g^2=0.001, gamma_r=0.01, mu=0.93)",
        "differenced nonlinear residual at the optimum drive; long segments "
        "resolve the narrow (1-mu+gamma_r)-wide feature",
        0.001, 0.01, 0.93, ["nl_spectrum", "spectra"],
        t_burn=1000.0, seed=20240503, scheme="euler",
        spectra={"t_seg": 200.0, "omega_max": 10.0},
        reduced={"integrator": {"n_traj": 400, "t_record": 2400.0}},
    )
    p["moments_mu05"] = _sim(
        "moments_mu05",
        "stationary moment hierarchy (gamma_r=1, mu=0.5)",
        "pump depletion, quadrature products and the triple moment vs closed "
        "forms; g^2 small enough that order-g^2 corrections stay within errors",
        0.001, 1.0, 0.5, ["moments"],
        t_burn=100.0, t_record=2000.0, n_traj=500, seed=20240504, companion=False,
        reduced={"integrator": {"n_traj": 240, "t_record": 1500.0}},
    )
    p["triple_mu05"] = _sim(
        "triple_mu05",
        "triple spectral correlation, positive-P (gamma_r=1, mu=0.5)",
        "x-y+-y0 spectral density on a small frequency grid vs the closed form",
        0.001, 1.0, 0.5, ["triple"],
        t_burn=100.0, t_record=2000.0, n_traj=400, seed=20240505, companion=False,
        spectra={"t_seg": 50.0, "omega_max": 5.0}, triple_kmax=5,
        reduced={"integrator": {"n_traj": 240, "t_record": 1500.0}},
    )
    p["triple_wigner_mu0"] = _sim(
        "triple_wigner_mu0",
        "triple spectral correlation, semiclassical vacuum (gamma_r=1, mu=0)",
        "nonzero semiclassical triple correlation with the pump off",
        0.04, 1.0, 0.0, ["triple"],
        t_burn=50.0, t_record=4800.0, n_traj=600, seed=20240506, companion=False,
        representation="wigner", dt=5e-3,
        spectra={"t_seg": 40.0, "omega_max": 5.0}, triple_kmax=3,
        reduced={"integrator": {"n_traj": 600, "t_record": 2400.0}},
    )
    p["epr_mu093"] = _analytic(
        "epr_mu093",
        "EPR and inseparability verdicts near the optimum drive (g^2=0.001, gamma_r=0.01)",
        "zero-frequency criteria evaluated from the closed-form spectra",
        ["analytic_epr"],
        {"g2": 0.001, "gamma_r": 0.01, "mu_grid": [0.01, 0.95, 95]},
    )
    p["crit_xx"] = {
        "experiment": {
            "name": "crit_xx",
            "representation": "critical",
            "seed": 20240507,
            "outputs": ["critical_r2"],
            "figure": "critical fluctuation variance at and around threshold",
            "description": "reduced critical SDE ensemble vs the quadrature oracle on an eta grid",
        },
        "critical": {"eta_grid": [-5.0, -2.0, -1.0, 0.0, 1.0, 2.0, 5.0]},
        "integrator": {
            "dt": 0.002, "t_burn": 30.0, "t_record": 300.0, "n_traj": 400,
            "batch_size": 400,
        },
        "reduced": {"integrator": {"n_traj": 200, "t_record": 150.0}},
    }
    p["crit_squeeze"] = _analytic(
        "crit_squeeze",
        "critical squeezing moment vs scaled drive offset (g=0.01)",
        "<y y+> near threshold; identical in both representations, minimized above eta=0",
        ["analytic_critical_squeeze"],
        {"g": 0.01, "gamma_r_list": [0.1, 1.0, 10.0], "eta_grid": [-5.0, 10.0, 151]},
    )
    return p


_PRESETS = _build_presets()


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def get_preset(name: str, reduced: bool = False) -> dict:
    """Deep copy of a preset config, with reduced overrides applied on demand."""
    if name not in _PRESETS:
        raise ParameterError(f"unknown preset {name!r}; see list-presets")
    cfg = copy.deepcopy(_PRESETS[name])
    overrides = cfg.pop("reduced", None)
    if reduced:
        if not overrides:
            raise ParameterError(f"preset {name!r} has no reduced variant")
        for section, vals in overrides.items():
            cfg.setdefault(section, {}).update(vals)
        cfg["experiment"]["name"] = cfg["experiment"]["name"] + "_reduced"
    return cfg


def catalog() -> list[dict]:
    """Stable-ordered catalog rows: name, kind, figure, parameter summary."""
    rows = []
    for name in preset_names():
        cfg = _PRESETS[name]
        exp = cfg["experiment"]
        if exp["representation"] == "analytic":
            params = cfg.get("analytic", {})
        elif exp["representation"] == "critical":
            params = cfg.get("critical", {})
        else:
            params = cfg.get("params", {})
        rows.append({
            "name": name,
            "kind": exp["representation"],
            "figure": exp["figure"],
            "description": exp["description"],
            "params": params,
            "has_reduced": "reduced" in cfg,
        })
    return rows
