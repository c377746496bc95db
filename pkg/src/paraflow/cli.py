"""Batch experiment runner: `paraflow <command> --config cfg.toml --out dir`.

Commands
    certify        hypothesis checkers: dissipativity, asymptotic slopes,
                   derivative bound, non-resonance at zero and infinity
    spectrum       non-resonance reports for both linearizations (m, m')
    evolve         one monitored trajectory, CSV series plus verdicts
    equilibria     multi-start Newton census
    homotopy       a-priori bound scan over the blend family
    heteroclinic   connections out of the unstable directions at zero
    admissibility  endpoint compactness proxy for long confined runs
    convergence    perturbed-model trajectories against the base run

Exit status: 0 on success, 2 when a run produced a falsified-configuration
verdict (bound violation, uncertified hypothesis, missing predicted
connection), 1 on usage or validation errors.  Identical config and seed
give byte-identical CSV output; every artifact records the config hash.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, FieldConfig, load_config
from .connect import EquilibriumCensus, heteroclinic_search
from .equilibria import find_equilibria, homotopy_bound_scan, _jacobian
from .grid import Field, norms
from .model import check_asymptotic_slopes, check_dissipativity, lipschitz_bound
from .operator import assemble_laplacian
from .semiflow import (
    STATUS_BLOWUP,
    admissibility_experiment,
    convergence_experiment,
    dissipation_check,
    evolve,
    tail_bound_check,
)
from .model import with_source, Well
from .spectrum import nonresonance_report

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERDICT = 2


class Workspace:
    """Shared per-run state: config, grid, operator, output directory."""

    def __init__(self, cfg: ExperimentConfig, out_dir: Path):
        self.cfg = cfg
        self.out = out_dir
        self.grid = cfg.grid.build()
        self.model = cfg.model.build()
        self.A = assemble_laplacian(self.grid)
        self.rng = np.random.default_rng(cfg.run.seed)
        self.summary_lines: list[str] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    @property
    def meta(self) -> str:
        return f"# paraflow {__version__} config={self.cfg.config_hash}"

    def note(self, line: str) -> None:
        self.summary_lines.append(line)
        print(line)

    def write_csv(self, name: str, header: list[str], rows) -> None:
        path = self.out / name
        with open(path, "w") as fh:
            fh.write(self.meta + "\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_cell(v) for v in row) + "\n")

    def finish(self, verdict_ok: bool) -> int:
        self.summary_lines.append("verdict: " + ("OK" if verdict_ok else "FALSIFIED"))
        with open(self.out / "summary.txt", "w") as fh:
            fh.write(self.meta + "\n")
            fh.write("\n".join(self.summary_lines) + "\n")
        return EXIT_OK if verdict_ok else EXIT_VERDICT


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _linearization_reports(ws: Workspace):
    tol = ws.cfg.spectrum.tol or None
    m = ws.model
    J_inf = _jacobian(ws.A, np.asarray(m.alpha.slope(ws.grid.nodes)))
    J_zero = _jacobian(ws.A, np.asarray(m.gamma.slope(ws.grid.nodes)))
    rep_inf = nonresonance_report(J_inf, m.alpha.base_level, tol=tol)
    rep_zero = nonresonance_report(J_zero, m.gamma.base_level, tol=tol)
    return rep_inf, rep_zero


def cmd_spectrum(ws: Workspace) -> int:
    rep_inf, rep_zero = _linearization_reports(ws)
    rows = []
    for name, rep in (("infinity", rep_inf), ("zero", rep_zero)):
        for i, ev in enumerate(rep.eigenvalues_below_cutoff):
            rows.append((name, i, float(ev)))
    ws.write_csv("spectrum.csv", ["operator", "index", "eigenvalue"], rows)
    certified = rep_inf.certified and rep_zero.certified
    ws.note(
        f"m={rep_inf.count_negative} m'={rep_zero.count_negative} "
        + ("certified" if certified else "uncertified")
    )
    ws.note(f"kernel gap at infinity: {rep_inf.kernel_gap:.6g} (tol {rep_inf.tol:.3g})")
    ws.note(f"kernel gap at zero: {rep_zero.kernel_gap:.6g} (tol {rep_zero.tol:.3g})")
    return ws.finish(certified)


def cmd_certify(ws: Workspace) -> int:
    cfg = ws.cfg.certify
    m = ws.model
    xs = ws.grid.nodes
    us = np.linspace(-cfg.u_range, cfg.u_range, cfg.n_samples)
    viol = check_dissipativity(m, xs, us)
    dev_inf, dev_zero = check_asymptotic_slopes(m, xs, cfg.u_large_factor * m.s0)
    lip = lipschitz_bound(m, xs)
    rep_inf, rep_zero = _linearization_reports(ws)

    checks = [
        ("dissipativity inequality", f"max violation {viol:.3e}", viol <= 1e-10),
        ("slope at infinity", f"max deviation {dev_inf:.3e}", dev_inf <= 1e-5 * max(lip, 1.0)),
        ("slope at zero", f"max deviation {dev_zero:.3e}", dev_zero <= 1e-12),
        ("bounded derivative", f"certified bound {lip:.6g}", np.isfinite(lip)),
        (
            "non-resonance at infinity",
            f"m={rep_inf.count_negative} gap={rep_inf.kernel_gap:.6g}",
            rep_inf.certified,
        ),
        (
            "non-resonance at zero",
            f"m'={rep_zero.count_negative} gap={rep_zero.kernel_gap:.6g}",
            rep_zero.certified,
        ),
    ]
    rows = []
    all_ok = True
    for name, detail, ok in checks:
        rows.append((name, detail, ok))
        all_ok = all_ok and ok
        ws.note(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    ws.write_csv("certify.csv", ["check", "detail", "passed"], rows)
    return ws.finish(all_ok)


def cmd_evolve(ws: Workspace) -> int:
    run = ws.cfg.run
    u0 = run.u0.build(ws.grid, ws.rng)
    rec = evolve(u0, ws.model, ws.A, run.T, run.dt, run.monitors())
    ks = sorted(rec.tails.keys())
    header = ["t", "l2", "h1", "V", "dV_proxy"] + [f"tail_{k:g}" for k in ks]
    rows = zip(rec.times, rec.l2, rec.h1, rec.energy, -rec.udot**2, *(rec.tails[k] for k in ks))
    ws.write_csv("trajectory.csv", header, ([float(v) for v in row] for row in rows))

    max_inc = dissipation_check(rec)
    tol_energy = 1e-8 * (1.0 + abs(rec.energy[0]))
    ws.note(f"status: {rec.status} after t={rec.times[-1]:g}")
    ws.note(f"max energy increase per step: {max_inc:.3e} (tol {tol_energy:.3e})")
    ok = rec.status != STATUS_BLOWUP and max_inc <= tol_energy
    try:
        margins = tail_bound_check(rec)
        for k, margin in margins.items():
            ws.note(f"tail margin k={k:g}: {margin:.6g}")
            ok = ok and margin <= 0
    except ValueError as exc:
        ws.note(f"tail bound skipped: {exc}")
    return ws.finish(ok)


def cmd_equilibria(ws: Workspace) -> int:
    cfg = ws.cfg.equilibria
    eqs = find_equilibria(
        ws.model,
        ws.A,
        n_random=cfg.n_random,
        seed=ws.cfg.run.seed,
        eigen_amplitudes=tuple(cfg.eigen_amplitudes),
        random_amplitude=cfg.random_amplitude,
        dedup_tol_factor=cfg.dedup_tol_factor,
        delta_trivial=cfg.delta_trivial,
    )
    rows = [
        (i, eq.h1_norm, eq.energy, eq.morse_index, eq.residual, eq.trivial)
        for i, eq in enumerate(eqs)
    ]
    ws.write_csv(
        "equilibria.csv", ["id", "h1_norm", "energy", "morse_index", "residual", "trivial"], rows
    )
    ws.note(f"{len(eqs)} equilibria ({sum(not e.trivial for e in eqs)} nontrivial)")
    return ws.finish(True)


def cmd_homotopy(ws: Workspace) -> int:
    cfg = ws.cfg.homotopy
    probe_spec = FieldConfig(kind="random", amplitude=cfg.probe_amplitude)
    probes = [probe_spec.build(ws.grid, ws.rng) for _ in range(cfg.n_probes)]
    eqs = find_equilibria(ws.model, ws.A, n_random=4, seed=ws.cfg.run.seed)
    scan = homotopy_bound_scan(
        ws.model,
        ws.A,
        cfg.grid_points(),
        probes,
        T=cfg.T,
        dt=ws.cfg.run.dt,
        monitors=ws.cfg.run.monitors(),
        near_equilibria=eqs,
    )
    rows = [
        (r.lam, r.sup_h1, r.n_blowup, r.l2_monotone)
        for r in scan.records
    ]
    ws.write_csv("homotopy.csv", ["lambda", "sup_h1", "n_blowup", "l2_monotone"], rows)
    ws.note(f"R_observed = {scan.r_observed:.6g}")
    ws.note(f"blow-up violations: {int(scan.violated)}")
    ws.note(f"lambda=0 probes l2-monotone: {scan.records[0].l2_monotone}")
    return ws.finish(not scan.violated)


def cmd_heteroclinic(ws: Workspace) -> int:
    cfg = ws.cfg.heteroclinic
    eqs = find_equilibria(ws.model, ws.A, seed=ws.cfg.run.seed)
    census = EquilibriumCensus(eqs)
    result = heteroclinic_search(
        ws.model,
        ws.A,
        census,
        eps_seed=cfg.eps_seed,
        T_max=cfg.T_max,
        dt=ws.cfg.run.dt,
        conn_tol_factor=cfg.conn_tol_factor,
    )
    rows = []
    for i, rec in enumerate(result.records):
        rows.append(
            (
                i,
                rec.source_id,
                rec.target_id,
                rec.seed_sign,
                rec.target.h1_norm,
                rec.energy_drop,
                rec.closeness,
                len(rec.trajectory.times) - 1,
            )
        )
        if cfg.full_trajectories:
            traj = rec.trajectory
            ws.write_csv(
                f"connection_{i}.csv",
                ["t", "l2", "h1", "V", "dV_proxy"],
                zip(traj.times, traj.l2, traj.h1, traj.energy, -traj.udot**2),
            )
    ws.write_csv(
        "connections.csv",
        ["id", "source_id", "target_id", "seed_sign", "target_h1", "energy_drop",
         "closeness", "steps"],
        rows,
    )
    ws.note(f"{len(result.records)} connections, {result.nonconvergent} nonconvergent seeds")
    if result.fail:
        ws.note("FAIL: indices differ but no connection was resolved")
    return ws.finish(not result.fail)


def cmd_admissibility(ws: Workspace) -> int:
    cfg = ws.cfg.admissibility
    u0s = []
    for _ in range(cfg.n_trajectories):
        raw = ws.rng.standard_normal(ws.grid.n_interior)
        h1 = norms(Field(raw, ws.grid))[1]
        u0s.append(Field(raw * (cfg.amplitude / max(h1, 1e-300)), ws.grid))
    t_list = [float(j) for j in range(1, cfg.n_trajectories + 1)]
    R = cfg.R if cfg.R > 0 else 2.0 * max(norms(u)[1] for u in u0s)
    report = admissibility_experiment(
        u0s, t_list, ws.model, ws.A, R=R, k=cfg.k, dt=ws.cfg.run.dt, tau=cfg.tau,
        monitors=ws.cfg.run.monitors(),
    )
    rows = [
        (e.index, e.t_requested, e.t_reached, e.confined, e.endpoint_tail, e.tail_bound,
         e.within_bound, e.status)
        for e in report.entries
    ]
    ws.write_csv(
        "admissibility.csv",
        ["j", "t_requested", "t_reached", "confined", "endpoint_tail", "bound", "within", "status"],
        rows,
    )
    excluded = [e.index for e in report.entries if not e.confined]
    ok = all(e.within_bound for e in report.entries if e.confined)
    ws.note(f"t_j divergent: {report.t_divergent}")
    ws.note(f"excluded (left the h1 ball): {excluded if excluded else 'none'}")
    ws.note(f"endpoint l2 diameter: {report.diameter_l2:.6g}")
    ws.note(f"tail-subtracted diameter: {report.diameter_l2_tail_subtracted:.6g}")
    ws.note(f"last-10 diameter: {report.diameter_l2_last10:.6g}")
    return ws.finish(ok)


def cmd_convergence(ws: Workspace) -> int:
    cfg = ws.cfg.convergence
    base_u0 = ws.cfg.run.u0.build(ws.grid, ws.rng)
    variants = []
    for j in cfg.j_list:
        mj = with_source(ws.model, Well("gaussian", 1.0 / j, 1.0))
        variants.append((str(j), mj, base_u0))
    entries = convergence_experiment(
        ws.model, base_u0, variants, cfg.delta, cfg.T, ws.cfg.run.dt, ws.A
    )
    rows = [(e.label, e.sup_h1_error, e.u0_l2_distance, e.lip_bound) for e in entries]
    ws.write_csv("convergence.csv", ["j", "sup_h1_error", "u0_l2_distance", "lip_bound"], rows)
    for e in entries:
        ws.note(f"j={e.label}: sup h1 error {e.sup_h1_error:.6e}")
    ok = entries[-1].sup_h1_error < entries[0].sup_h1_error
    return ws.finish(ok)


COMMANDS = {
    "certify": cmd_certify,
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "equilibria": cmd_equilibria,
    "homotopy": cmd_homotopy,
    "heteroclinic": cmd_heteroclinic,
    "admissibility": cmd_admissibility,
    "convergence": cmd_convergence,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paraflow",
        description="batch experiments for the truncated semilinear heat flow",
    )
    parser.add_argument("--version", action="version", version=f"paraflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--out", required=True, help="output directory for artifacts")
        p.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="config override, e.g. model.gamma.well.amplitude=3.0",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.override)
    except (OSError, ConfigError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    ws = Workspace(cfg, Path(args.out))
    try:
        return COMMANDS[args.command](ws)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
