"""Command line interface.

    opasqueeze green      --config run.yaml --out out/
    opasqueeze decompose  --config run.yaml   (or --green out/green_s1.opsq)
    opasqueeze scaling    --config run.yaml
    opasqueeze homodyne   --config run.yaml
    opasqueeze gaussian   --config run.yaml
    opasqueeze <cmd> --config run.yaml --verify

Exit codes: 0 success, 1 numerical failure, 2 input or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np
import pydantic
import yaml

from opasqueeze import pipeline
from opasqueeze.blochmessiah import (
    CONSTRAINT_WARN,
    parity_defects,
    squeezing_lengths,
    time_reversal_check,
    verify_constraints,
)
from opasqueeze.config import RunConfig, load_config
from opasqueeze.errors import NumericalError, PhaseAlignmentError
from opasqueeze.gaussian import analytic_overlaps, gaussian_decomposition, gaussian_zeta
from opasqueeze.homodyne import efficiency_sweep, homodyne, master_laser_curve, squeezing_db
from opasqueeze.io import (
    csv_bytes,
    dumps_decomposition,
    dumps_green_pair,
    load_green_pair,
    write_atomic,
)

log = logging.getLogger("opasqueeze")

EXIT_OK, EXIT_NUMERICAL, EXIT_INPUT = 0, 1, 2
CONTOUR_LEVELS = [0.2, 0.4, 0.6]
VERIFY_TOL = 1e-6
MAX_SCALING_RATIO = 15.0


class Outputs:
    """Collects files in memory and writes them only once the command has succeeded."""

    def __init__(self, directory: Path, cfg: RunConfig):
        self.directory = directory
        self.files: dict[str, bytes] = {}
        self.gnuplot: dict[str, str] = {}
        self.common = {
            "config_sha256": cfg.digest(),
            "units": {"omega": "rad/fs", "time": "fs", "length": "mm", "variance": "vacuum = 1/4"},
        }

    def csv(self, name: str, header, rows, comments=None, block_size=None):
        meta = dict(self.common)
        meta.update(comments or {})
        self.files[name] = csv_bytes(header, rows, meta, block_size)

    def raw(self, name: str, data: bytes):
        self.files[name] = data

    def flush(self, with_gnuplot: bool) -> list[str]:
        written = []
        for name, data in sorted(self.files.items()):
            write_atomic(self.directory / name, data)
            written.append(name)
        if with_gnuplot:
            for name, script in sorted(self.gnuplot.items()):
                write_atomic(self.directory / name, script.encode())
                written.append(name)
        return written


def _tag(strength: float) -> str:
    return f"s{strength:g}"


def _surface(directory_name, title, column):
    return (
        "set datafile separator ','\nset view map\nset pm3d map\n"
        f"set title '{title}'\nset xlabel 'omega (rad/fs)'\nset ylabel \"omega' (rad/fs)\"\n"
        f"splot '{directory_name}' using 1:2:{column} with pm3d notitle\n"
    )


def cmd_green(cfg: RunConfig, out: Outputs, workers: int, args) -> dict:
    if cfg.medium is None:
        raise ValueError("green needs a medium/pump configuration")
    pairs = pipeline.solve_all(cfg, workers)
    summary = {"strengths": []}
    for strength, g in pairs:
        tag = _tag(strength)
        report = verify_constraints(g)
        w = g.grid.omega
        c_abs, s_abs = np.abs(g.C.entries), np.abs(g.S.entries)
        rows = (
            (w[i], w[j], c_abs[i, j], s_abs[i, j])
            for i in range(len(w))
            for j in range(len(w))
        )
        levels = {
            "C": [lvl * float(c_abs.max()) for lvl in CONTOUR_LEVELS],
            "S": [lvl * float(s_abs.max()) for lvl in CONTOUR_LEVELS],
        }
        name = f"green_{tag}_abs.csv"
        out.csv(
            name,
            ["omega_rad_per_fs", "omega_prime_rad_per_fs", "abs_C_fs", "abs_S_fs"],
            rows,
            {"strength_L_over_LNL": strength, "picture": g.picture,
             "contour_fractions": CONTOUR_LEVELS, "contour_levels": levels,
             "constraints": report.to_dict()},
            block_size=len(w),
        )
        out.gnuplot[f"green_{tag}_C.gp"] = _surface(name, f"|C|, L/L_NL={strength:g}", 3)
        out.gnuplot[f"green_{tag}_S.gp"] = _surface(name, f"|S|, L/L_NL={strength:g}", 4)
        out.raw(f"green_{tag}.opsq", dumps_green_pair(g, {"config_sha256": cfg.digest()}))
        summary["strengths"].append({"strength": strength, "constraints": report.to_dict(),
                                     "max_change_on_halving": g.metadata.get("max_change_on_halving")})
    return summary


def _decompositions(cfg: RunConfig, workers: int, green_file: str | None):
    """(label, strength or None, decomposition, length_mm) for the configured source."""
    if cfg.analysis.n_modes < 1:
        raise ValueError("analysis.n_modes must be at least 1")
    if green_file:
        g = load_green_pair(green_file)
        if g.picture == "raw":
            from opasqueeze.propagation import compensate_linear_phase

            g = compensate_linear_phase(g)
        strength = g.metadata.get("strength")
        length = g.medium.length if g.medium is not None else None
        label = Path(green_file).stem
        return [(label, strength, pipeline.decompose_pair(cfg, g), length)]
    if cfg.medium is not None:
        pairs = pipeline.solve_all(cfg, workers)
        return [(_tag(s), s, pipeline.decompose_pair(cfg, g), cfg.medium.length_mm) for s, g in pairs]
    _, g = pipeline.gaussian_pair(cfg)
    return [("gaussian", None, pipeline.decompose_pair(cfg, g), None)]


def cmd_decompose(cfg: RunConfig, out: Outputs, workers: int, args) -> dict:
    summary = {"runs": []}
    results = _decompositions(cfg, workers, args.green)
    p = pipeline.gaussian_params(cfg) if cfg.gaussian is not None and cfg.medium is None and not args.green else None
    for label, strength, d, length in results:
        parity = parity_defects(d)
        reversal = time_reversal_check(d)
        header = ["n", "zeta", "sinh_zeta", "squeezing_db", "parity_defect", "time_reversal_defect"]
        rows = []
        for n, z in enumerate(d.zetas):
            row = [n, z, math.sinh(z), squeezing_db(0.25 * math.exp(-2 * z)), parity[n], reversal[n]]
            rows.append(row)
        comments = {"residuals": d.residuals}
        if strength:
            l_nl = length / strength
            header.append("squeezing_length_mm")
            for row, z in zip(rows, d.zetas):
                row.append(z * l_nl)
            comments["strength_L_over_LNL"] = strength
        if p is not None:
            header.append("zeta_closed_form")
            expected = gaussian_zeta(p, np.arange(len(d)))
            for row, z in zip(rows, expected):
                row.append(z)
        out.csv(f"zeta_{label}.csv", header, rows, comments)
        w = d.grid.omega
        intens = np.stack([m.intensity() for m in d.output_modes], axis=1)
        out.csv(
            f"modes_{label}.csv",
            ["omega_rad_per_fs"] + [f"psi{n}_intensity_per_rad_fs" for n in range(len(d))],
            (np.concatenate(([w[i]], intens[i])) for i in range(len(w))),
            comments,
        )
        out.raw(f"decomposition_{label}.opsq", dumps_decomposition(d, {"config_sha256": cfg.digest()}))
        out.gnuplot[f"modes_{label}.gp"] = (
            "set datafile separator ','\nset xlabel 'omega (rad/fs)'\n"
            f"plot for [k=2:{min(len(d), 4) + 1}] 'modes_{label}.csv' using 1:k with lines title columnhead\n"
        )
        summary["runs"].append({
            "label": label, "strength": strength, "zetas": d.zetas[: min(len(d), 8)].tolist(),
            "residuals": d.residuals,
            "max_parity_defect": float(parity.max()), "max_time_reversal_defect": float(reversal.max()),
        })
    return summary


def cmd_scaling(cfg: RunConfig, out: Outputs, workers: int, args) -> dict:
    if cfg.medium is None:
        raise ValueError("scaling needs a medium/pump configuration")
    strengths = cfg.strengths()
    if len(set(strengths)) < 3:
        raise ValueError("scaling needs at least three distinct pump strengths")
    excluded = [s for s in strengths if s > MAX_SCALING_RATIO]
    kept = [s for s in strengths if 0 < s <= MAX_SCALING_RATIO]
    warn = []
    if excluded:
        msg = f"strengths {excluded} exceed L/L_NL = {MAX_SCALING_RATIO:g}; excluded from the fit"
        warnings.warn(msg)
        warn.append(msg)
    if len(kept) < 3:
        raise ValueError("scaling needs at least three pump strengths in 0 < L/L_NL <= 15")
    pairs = pipeline.solve_all(cfg, workers, kept)
    runs = [(s, pipeline.decompose_pair(cfg, g)) for s, g in pairs]
    report = squeezing_lengths(runs, length=cfg.medium.length_mm)
    k = min(cfg.analysis.scaling_modes, len(report.fitted))
    lead_spread = report.spread[:k]
    valid = bool(np.all(lead_spread < report.spread_limit))
    decreasing = bool(np.all(np.diff(report.fitted[:k]) < 0))
    header = ["n", "lambda_fit_mm", "relative_spread"] + [f"lambda_mm_at_{s:g}" for s in kept]
    rows = [
        [n, report.fitted[n], report.spread[n]] + list(report.lengths[:, n])
        for n in range(len(report.fitted))
    ]
    verdict = "valid" if valid else "invalid"
    out.csv("scaling.csv", header, rows, {"verdict": verdict, "verdict_modes": k,
                                          "spread_limit": report.spread_limit,
                                          "excluded_strengths": excluded,
                                          "lambda_decreasing": decreasing})
    out.gnuplot["scaling.gp"] = (
        "set datafile separator ','\nset logscale y\nset xlabel 'n'\nset ylabel 'Lambda_n (mm)'\n"
        "plot 'scaling.csv' using 1:2 with linespoints title 'Lambda_n'\n"
    )
    return {"verdict": verdict, "verdict_modes": k, "lambda_decreasing": decreasing,
            "lambda_mm": report.fitted.tolist(), "spread": report.spread.tolist(),
            "excluded_strengths": excluded, "warnings": warn}


def cmd_homodyne(cfg: RunConfig, out: Outputs, workers: int, args) -> dict:
    if cfg.medium is None:
        return _homodyne_gaussian(cfg, out)
    results = _decompositions(cfg, workers, args.green)
    summary = {"runs": []}
    for label, strength, d, _ in results:
        lo = pipeline.build_lo(cfg, d.grid)
        try:
            res = homodyne(lo, d, aligned=cfg.analysis.aligned)
        except PhaseAlignmentError as exc:
            diag = {"error": "phase-alignment", "message": str(exc), "run": label,
                    "defects": np.asarray(exc.defects).tolist()}
            write_atomic(out.directory / f"phase_alignment_{label}.json",
                         json.dumps(diag, indent=2, sort_keys=True).encode())
            raise
        out.csv(
            f"homodyne_{label}.csv",
            ["n", "overlap_abs", "overlap_arg_rad", "zeta"],
            ([n, abs(m), float(np.angle(m)), z] for n, (m, z) in enumerate(zip(res.overlaps, d.zetas))),
            {"q_plus": res.q_plus, "q_minus": res.q_minus, "eta": res.eta,
             "squeezing_db": res.squeezing_db, "unmatched_fraction": res.unmatched_fraction},
        )
        summary["runs"].append({"label": label, "q_plus": res.q_plus, "q_minus": res.q_minus,
                                "eta": res.eta, "squeezing_db": res.squeezing_db,
                                "unmatched_fraction": res.unmatched_fraction})
    return summary


def _homodyne_gaussian(cfg: RunConfig, out: Outputs) -> dict:
    if cfg.gaussian is None:
        raise ValueError("homodyne needs a gaussian section or a medium/pump configuration")
    p = pipeline.gaussian_params(cfg)
    g = cfg.gaussian
    rp = np.linspace(g.r_prime_sweep.start, g.r_prime_sweep.stop, g.r_prime_sweep.points)
    curve = efficiency_sweep(p, rp, g.m_max)
    out.csv(
        "efficiency_linewidth.csv",
        ["r_prime", "delta_lo_rad_per_fs", "eta", "q_plus", "q_minus", "squeezing_db", "truncation_defect"],
        ([x, p.delta_lo(x), e, a, b, squeezing_db(b), t]
         for x, e, a, b, t in zip(curve.x, curve.eta, curve.q_plus, curve.q_minus, curve.truncation_defect)),
        {"r": p.r, "mean_photon_number": p.N},
    )
    rs = np.linspace(g.master_laser_r_sweep.start, g.master_laser_r_sweep.stop, g.master_laser_r_sweep.points)
    master = master_laser_curve(rs, p.N, g.m_max)
    out.csv(
        "efficiency_master_laser.csv",
        ["r", "eta", "q_plus", "q_minus", "truncation_defect"],
        zip(master.x, master.eta, master.q_plus, master.q_minus, master.truncation_defect),
        {"r_prime": "-r", "mean_photon_number": p.N},
    )
    out.gnuplot["efficiency.gp"] = (
        "set datafile separator ','\nset xlabel \"r'\"\nset ylabel 'eta'\n"
        "plot 'efficiency_linewidth.csv' using 1:3 with lines title 'eta'\n"
    )
    return {"r": p.r, "eta_min_on_sweep": float(curve.eta.min()),
            "eta_master_laser_at_max_r": float(master.eta[-1])}


def cmd_gaussian(cfg: RunConfig, out: Outputs, workers: int, args) -> dict:
    if cfg.gaussian is None:
        raise ValueError("the gaussian command needs a gaussian section")
    p = pipeline.gaussian_params(cfg)
    grid = pipeline.gaussian_grid(cfg, p)
    n_modes = cfg.analysis.n_modes
    if n_modes < 1:
        raise ValueError("analysis.n_modes must be at least 1")
    zetas = gaussian_zeta(p, np.arange(n_modes))
    out.csv("gaussian_zeta.csv", ["n", "zeta", "sinh_zeta"],
            ([n, z, math.sinh(z)] for n, z in enumerate(np.atleast_1d(zetas))),
            {"r": p.r, "tau_s_fs": p.tau_s, "mean_photon_number": p.N,
             "photon_number_sum": float(np.sum(np.sinh(np.atleast_1d(zetas)) ** 2))})
    d = gaussian_decomposition(p, grid, min(n_modes, 6))
    w = grid.omega
    out.csv("gaussian_modes.csv", ["omega_rad_per_fs"] + [f"psi{n}" for n in range(len(d))],
            (np.concatenate(([w[i]], [m.values[i].real + m.values[i].imag for m in d.output_modes]))
             for i in range(len(w))), {"tau_s_fs": p.tau_s, "odd_modes": "imaginary; listed as imag part"})
    summary = {"r": p.r, "tau_s_fs": p.tau_s, "zetas": np.atleast_1d(zetas)[:8].tolist()}
    lo = cfg.analysis.lo
    if lo is not None and lo.kind == "gaussian":
        delta_lo = p.delta_lo(lo.r_prime) if lo.r_prime is not None else lo.bandwidth_rad_per_fs
        m = analytic_overlaps(p, delta_lo, cfg.gaussian.m_max or 64)
        out.csv("gaussian_overlaps.csv", ["n", "M_n"], enumerate(m),
                {"r_prime": p.r_prime(delta_lo), "series_defect": float(1 - np.sum(m**2))})
        summary["r_prime"] = p.r_prime(delta_lo)
    return summary


def verify(cfg: RunConfig, workers: int) -> tuple[int, dict]:
    """Constraint suite for the configured Green functions."""
    if cfg.medium is not None:
        pairs = pipeline.solve_all(cfg, workers)
        rows = pipeline.constraint_summary(pairs)
        ok = all(max(r["symmetry"], r["unitarity"]) < VERIFY_TOL for r in rows)
        return (EXIT_OK if ok else EXIT_NUMERICAL), {"tolerance": VERIFY_TOL, "constraints": rows, "passed": ok}
    p, g = pipeline.gaussian_pair(cfg)
    report = verify_constraints(g).to_dict()
    zetas = gaussian_zeta(p, np.arange(4000))
    sum_rule = abs(float(np.sum(np.sinh(zetas) ** 2)) - p.N)
    # Perturbative kernels only satisfy the unitarity constraint to O(N).
    ok = report["symmetry"] < VERIFY_TOL and sum_rule < 1e-10
    return (EXIT_OK if ok else EXIT_NUMERICAL), {
        "constraints": report, "photon_number_sum_rule_error": sum_rule, "passed": ok,
        "note": f"unitarity deviation of perturbative kernels is O(N); warning level {CONSTRAINT_WARN:g}",
    }


COMMANDS = {
    "green": cmd_green,
    "decompose": cmd_decompose,
    "scaling": cmd_scaling,
    "homodyne": cmd_homodyne,
    "gaussian": cmd_gaussian,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opasqueeze", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="YAML run configuration")
        sp.add_argument("--out", help="output directory (overrides outputs.directory)")
        sp.add_argument("--threads", type=int, help="worker pool size")
        sp.add_argument("--verify", action="store_true", help="run the constraint suite and exit")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name in ("decompose", "homodyne"):
            sp.add_argument("--green", help="decompose a saved Green pair instead of solving")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.threads is not None and args.threads < 1:
            raise ValueError("--threads must be positive")
        workers = pipeline.worker_count(cfg, args.threads)
        directory = Path(args.out or cfg.outputs.directory)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if args.verify:
                code, summary = verify(cfg, workers)
                print(json.dumps(summary, indent=2, sort_keys=True))
                return code
            out = Outputs(directory, cfg)
            summary = COMMANDS[args.command](cfg, out, workers, args)
        summary["warnings"] = sorted({str(w.message) for w in caught} | set(summary.get("warnings", [])))
        summary["files"] = out.flush(cfg.outputs.gnuplot)
        summary["config_sha256"] = cfg.digest()
        print(json.dumps(summary, indent=2, sort_keys=True))
        return EXIT_OK
    except NumericalError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERICAL
    except (pydantic.ValidationError, yaml.YAMLError, ValueError, OSError, KeyError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
