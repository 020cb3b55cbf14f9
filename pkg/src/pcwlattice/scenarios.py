"""Scenario runners: validated config in, plot-ready tables and a summary out."""
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config as cfg
from .bandcoupling import (
    BandGrid,
    BandPatch,
    KernelParams,
    bz_integrate_bandgap,
    gamma_2d,
    interaction_length,
    kernel_bandgap,
    kernel_dispersive,
)
from .constants import C, H, NM, TWO_PI, UM, UM2_PER_S
from .errors import ConfigError, NotAMinimumError
from .gridio import read_band_grid, read_cp_grid
from .potentials import (
    CPModel,
    CPTerm,
    GMLatticeParams,
    GMTerm,
    PcwGeometry,
    SIBeamParams,
    SITerm,
    TrapScene,
)
from .raman import BudgetInputs, LambdaScheme, SpinModel, build_spin_model, coherence_cycles, optimize_detuning
from .slabmode import SlabGeometry, min_lattice_constant, solve_te_modes, standing_wave_period
from .special import k0
from .spindyn import DensityMatrix, evolve
from .species import species_lookup
from .trapscan import characterize, evaluate_grid, find_minima

MAX_SITES_REPORTED = 50


@dataclass
class RunResult:
    tables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def _species(conf):
    sp = species_lookup(conf.species)
    return sp if conf.eta is None else sp.with_eta(conf.eta)


def _resolve(base_dir, name):
    p = Path(name)
    return p if p.is_absolute() or base_dir is None else Path(base_dir) / p


# ---------------------------------------------------------------- slab


def run_slab(conf, base_dir=None, threads=1):
    lam = conf.lambda_nm * NM
    rows = []
    for W in conf.W_nm:
        for mode in solve_te_modes(SlabGeometry(conf.n, W * NM), lam):
            rows.append({
                "W_nm": W,
                "branch": mode.branch_index,
                "k_z_per_um": mode.k_z * UM,
                "beta_per_um": mode.beta * UM,
                "n_eff": mode.k_par / mode.k_0,
                "period_nm": standing_wave_period(mode) / NM,
                "E_out_over_E_in": mode.E_out,
            })
    d_min = min_lattice_constant(conf.n, lam) / NM
    fundamental = [r["period_nm"] for r in rows if r["branch"] == 0]
    return RunResult({"modes": rows}, {
        "d_min_nm": d_min,
        "thickest_fundamental_period_nm": fundamental[-1] if fundamental else math.nan,
    })


# ---------------------------------------------------------------- traps


def build_scene(conf, base_dir=None):
    species = _species(conf)
    geom = PcwGeometry(conf.slab.n, conf.slab.W_nm * NM, 0.0, conf.slab.R_nm * NM)
    terms = []
    if conf.cp.variant == "ingested_grid":
        grid = read_cp_grid(_resolve(base_dir, conf.cp.grid_file))
        terms.append(CPTerm(CPModel("ingested_grid", grid=grid, interpolation=conf.cp.interpolation)))
    elif conf.cp.variant != "none":
        R = conf.slab.R_nm * NM if conf.cp.variant == "analytic_hole" else None
        terms.append(CPTerm(CPModel(conf.cp.variant, conf.slab.n, R)))
    if conf.si is not None:
        params = SIBeamParams.from_wavelengths(species, TWO_PI * conf.si.Omega_2pi_Hz, conf.si.lambda_nm * NM)
        terms.append(SITerm(params, conf.si.z_t_nm * NM))
    period = None
    if conf.gm is not None:
        lam = conf.gm.lambda_nm * NM
        modes = solve_te_modes(SlabGeometry(conf.slab.n, conf.slab.W_nm * NM), lam)
        if conf.gm.branch >= len(modes):
            raise ConfigError(f"gm.branch {conf.gm.branch} not guided ({len(modes)} branches)")
        mode = modes[conf.gm.branch]
        delta = TWO_PI * C * (1.0 / species.lambda_a - 1.0 / lam)
        gm = GMLatticeParams(TWO_PI * conf.gm.Omega_2pi_Hz, delta, mode.k_par, mode.beta, 0.0, conf.gm.pattern)
        terms.append(GMTerm(gm))
        period = gm.period
        geom = PcwGeometry(geom.n, geom.W, period, geom.R)
    return TrapScene(species, tuple(terms), geom), period


def run_trap(conf, base_dir=None, threads=1):
    scene, period = build_scene(conf, base_dir)
    species = scene.species
    axes = [getattr(conf.scan, n).values() * NM for n in ("x_nm", "y_nm", "z_nm")]
    field_ = evaluate_grid(scene, *axes)
    spacing = min(float(np.min(np.diff(a))) for a in axes)
    minima = find_minima(field_)
    sites = []
    rejected = 0
    for cand in minima[:MAX_SITES_REPORTED]:
        try:
            site = characterize(scene, cand.position, species.mass, spacing=spacing)
        except NotAMinimumError:
            rejected += 1
            continue
        row = {"V_over_h_Hz": site.value / H}
        row.update(site.report_row(species, period))
        sites.append(row)
    cuts = []
    if minima:
        best = np.array(minima[0].position)
        for ax, name in enumerate("xyz"):
            coords = np.linspace(axes[ax][0], axes[ax][-1], conf.scan.cut_points)
            pts = np.repeat(best[:, None], coords.size, axis=1)
            pts[ax] = coords
            vals = scene(pts[0], pts[1], pts[2])
            cuts.extend({"axis": name, "coord_nm": c / NM, "V_over_h_Hz": v / H} for c, v in zip(coords, vals))
    summary = {"n_minima": len(minima), "n_characterized": len(sites), "n_rejected": rejected}
    if period is not None:
        summary["lattice_constant_nm"] = period / NM
    if sites:
        summary.update({f"deepest_{k}": v for k, v in sites[0].items()})
    return RunResult({"sites": sites, "cuts": cuts}, summary)


# ---------------------------------------------------------------- couplings


def _patch(species, pc):
    return BandPatch(species.omega_a, pc.A_um2_per_s * UM2_PER_S, pc.L_m_um * UM, pc.d_nm * NM)


def run_coupling(conf, base_dir=None, threads=1):
    species = _species(conf)
    patch = _patch(species, conf.patch)
    G = gamma_2d(species, patch)
    d = patch.d
    tables = {}
    if conf.A_sweep_um2_per_s is not None:
        rows = []
        for A in conf.A_sweep_um2_per_s.values():
            g = gamma_2d(species, BandPatch(patch.omega_c, A * UM2_PER_S, patch.L_m, d))
            rows.append({"A_um2_per_s": A, "Gamma_2d_2pi_Hz": g / TWO_PI, "Gamma_2d_over_Gamma_a": g / species.Gamma_a})
        tables["gamma2d"] = rows
    if conf.kernel is not None:
        xi = conf.kernel.xi_over_d * d
        delta = abs(patch.A) / xi**2
        gap = KernelParams(G, xi, -delta)
        disp = KernelParams(G, xi, delta)
        rows = []
        for r_d in conf.kernel.r_over_d.values():
            r = r_d * d
            h = kernel_dispersive(disp, r) / G
            rows.append({
                "r_over_d": r_d,
                "J_over_h_Gamma2d_bandgap": float(kernel_bandgap(gap, r)) / G,
                "gamma_over_2h_Gamma2d_dispersive": float(h.real),
                "J_over_h_Gamma2d_dispersive": float(h.imag),
            })
        tables["kernel"] = rows
    if conf.bz is not None:
        if conf.bz.band_file:
            grid = read_band_grid(_resolve(base_dir, conf.bz.band_file))
        else:
            grid = BandGrid.parabolic(patch.omega_c, patch.A, patch.L_m, d, n=conf.bz.synthetic_points)
        r_vec = np.asarray(conf.bz.r_over_d, dtype=float) * grid.d
        r = float(np.hypot(*r_vec))
        edge = float(grid.omega.min())

        def point(delta_hz):
            delta = TWO_PI * delta_hz
            J = bz_integrate_bandgap(grid, species, edge - delta, r_vec)
            xi = interaction_length(patch.A, delta)
            closed = G * k0(r / xi) if r > 0 else math.nan
            return {
                "Delta_2pi_Hz": delta_hz,
                "xi_over_d": xi / grid.d,
                "J_bz_over_Gamma_a": J / species.Gamma_a,
                "J_closed_over_Gamma_a": closed / species.Gamma_a,
            }

        with ThreadPoolExecutor(max_workers=threads) as pool:
            tables["bz"] = list(pool.map(point, conf.bz.Delta_2pi_Hz.values()))
    J_nn = G * k0(1.0 / 100.0)
    return RunResult(tables, {
        "Gamma_2d_2pi_Hz": G / TWO_PI,
        "Gamma_2d_over_Gamma_a": G / species.Gamma_a,
        "J_nn_xi100d_over_Gamma_a": J_nn / species.Gamma_a,
    })


def run_budget(conf, base_dir=None, threads=1):
    species = _species(conf)
    inputs = BudgetInputs(species, _patch(species, conf.patch), conf.Q,
                          conf.Gamma_prime_over_Gamma_a * species.Gamma_a)
    rows = []
    for delta_hz in conf.Delta_2pi_Hz.values():
        b = coherence_cycles(inputs, TWO_PI * delta_hz)
        rows.append({
            "Delta_2pi_Hz": delta_hz,
            "N_cycles": b.N_cycles,
            "J_over_Gamma_a": b.J / species.Gamma_a,
            "kappa_eff_2pi_Hz": b.kappa_eff / TWO_PI,
            "xi_over_d": b.xi / inputs.patch.d,
        })
    summary = {}
    if conf.optimize:
        lo, hi = conf.Delta_2pi_Hz.start, conf.Delta_2pi_Hz.stop
        opt = optimize_detuning(inputs, (TWO_PI * lo, TWO_PI * hi))
        summary = opt.report(species)
        summary["on_boundary"] = opt.on_boundary
        summary["stationarity_residual"] = opt.stationarity_residual
        summary["naive_balance_residual"] = opt.naive_balance
    return RunResult({"budget": rows}, summary)


# ---------------------------------------------------------------- spins


def _spin_model(conf):
    nx, ny = conf.lattice
    n = nx * ny
    c = conf.couplings
    if c.mode == "uniform":
        return SpinModel.uniform(
            n, TWO_PI * c.Jz_2pi_Hz, TWO_PI * c.Jxy_2pi_Hz, TWO_PI * c.gamma_z_2pi_Hz, TWO_PI * c.gamma_xy_2pi_Hz
        )
    species = _species(conf)
    patch = _patch(species, c.patch)
    scheme = LambdaScheme.from_detunings(
        TWO_PI * c.Omega_1_2pi_Hz, TWO_PI * c.Omega_2_2pi_Hz, TWO_PI * c.Delta_1_2pi_Hz,
        TWO_PI * c.Delta_z_2pi_Hz, TWO_PI * c.Delta_xy_2pi_Hz, patch.omega_c, TWO_PI * c.hyperfine_2pi_Hz,
    )
    sites = np.array([(i * patch.d, j * patch.d) for i in range(nx) for j in range(ny)])
    return build_spin_model(scheme, species, patch, sites)


def run_spins(conf, base_dir=None, threads=1):
    model = _spin_model(conf)
    rho0 = DensityMatrix.product(conf.initial)
    res = evolve(rho0, model, np.linspace(0.0, conf.t_final_s, conf.n_times), include_onsite=conf.include_onsite)
    summary = {
        "n_sites": model.n_sites,
        "final_total_sz": float(res.total_sz[-1]),
        "max_trace_error": float(res.trace_error.max()),
        "max_hermiticity_error": float(res.hermiticity_error.max()),
        "min_eigenvalue": float(res.min_eigenvalue.min()),
        "flags": "; ".join(res.flags),
    }
    if model.n_sites >= 2:
        summary["Jxy_01_2pi_Hz"] = float(model.Jxy[0, 1]) / TWO_PI
        summary["Jz_01_2pi_Hz"] = float(model.Jz[0, 1]) / TWO_PI
    return RunResult({"spins": res.rows()}, summary)


# ---------------------------------------------------------------- sweep


def _scalar_items(summary):
    return {k: v for k, v in summary.items() if isinstance(v, (int, float, str, bool))}


def sweep_points(conf):
    """Configs of the cartesian product of the axes, in axis order; no axes gives one point."""
    names = list(conf.axes)
    points = []
    for values in itertools.product(*(conf.axes[n] for n in names)):
        sc = conf.base
        for name, value in zip(names, values):
            sc = cfg.with_override(sc, name, value)
        points.append((dict(zip(names, values)), sc))
    return points


def run_sweep(conf, base_dir=None, threads=1):
    points = sweep_points(conf)

    def one(item):
        coords, sc = item
        result = RUNNERS[sc.kind](sc, base_dir, 1)
        row = dict(coords)
        row.update(_scalar_items(result.summary))
        return row

    # ordered map: rows come back in point order whatever the thread count
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(one, points))
    return RunResult({"sweep": rows}, {"n_points": len(rows)})


RUNNERS = {
    "slab": run_slab,
    "trap": run_trap,
    "vacuum-lattice": run_trap,
    "coupling": run_coupling,
    "budget": run_budget,
    "spins": run_spins,
    "sweep": run_sweep,
}


def run(conf, base_dir=None, threads=1):
    return RUNNERS[conf.kind](conf, base_dir, threads)
