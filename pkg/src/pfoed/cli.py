"""Configuration-driven study runner.

Commands
--------
eig          rank every candidate design by expected information gain
oed          same, then select the optimum (exhaustive or greedy)
infer        solve one stochastic inverse problem and report diagnostics
pushforward  tabulate the push-forward density of one design on a grid
models       list built-in forward models

Each run writes a CSV report plus a JSON summary next to it (``<output>.csv``
and ``<output>.json``).  Outputs are deterministic functions of the config:
reruns and different ``--threads`` values produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from typing import Iterable, Optional

import numpy as np

from .config import StudyConfig, design_space_from_config, load_config, sensors_from_config
from .core import UniformPrior, evaluate_designs, sample_prior, select_design
from .density import ObservedDensity
from .errors import ParseError, PfoedError, TooFewAccepted, ValidationError
from .inference import (
    consistency_error,
    fit_push_forward,
    posterior_ratios,
    rejection_sample,
)
from .information import kl_from_ratios
from .models import MODEL_NAMES, build_model
from .oed import EigReport, exhaustive_oed, greedy_oed, rank_designs

__all__ = ["main", "run_command", "write_report"]

ESTIMATOR_FORM = "prior-expectation Monte Carlo, natural log (nats)"


def _fmt(x: float) -> str:
    """Six significant digits, ASCII."""
    return f"{x:.6g}"


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=True) + "\n"


def write_report(rows: Iterable, ranking: tuple[int, ...], path: str) -> None:
    """Write the per-design CSV; rows ascend by design id.

    Header is ``design_id,coord_0,...,coord_{d-1},eig,n_infeasible,status``;
    coordinate columns are omitted when the designs carry no coordinates.
    """
    rows = sorted(rows, key=lambda r: r.design_id)
    if not rows:
        raise ValueError("no rows to write")
    coord_len = 0
    for r in rows:
        if r.coords is not None:
            coord_len = max(coord_len, sum(len(xy) for xy in r.coords))
    header = ["design_id"] + [f"coord_{i}" for i in range(coord_len)] + [
        "eig", "n_infeasible", "status"]
    lines = [",".join(header)]
    for r in rows:
        flat: list[str] = []
        if coord_len:
            vals = [c for xy in (r.coords or ()) for c in xy]
            flat = [_fmt(v) for v in vals] + [""] * (coord_len - len(vals))
        eig = _fmt(r.eig) if r.eig is not None else ""
        lines.append(",".join(
            [str(r.design_id)] + flat + [eig, str(r.n_infeasible_centers), r.status]))
    _atomic_write(path, "\n".join(lines) + "\n")


def _report_summary(report: EigReport) -> dict:
    return {
        "ranking": list(report.ranking),
        "chosen": report.chosen,
        "designs_evaluated": sum(1 for r in report.rows if r.ok),
        "designs_failed": sum(1 for r in report.rows if not r.ok),
        "designs_with_infeasible_centers": sum(
            1 for r in report.rows if r.ok and r.n_infeasible_centers > 0),
    }


def _prepare_study(cfg: StudyConfig):
    sensors = sensors_from_config(cfg)
    model = build_model(cfg.model_name, cfg.model_params, sensors)
    space = design_space_from_config(cfg, model.n_qoi, sensors)
    prior = UniformPrior(model.space)
    samples = sample_prior(prior, cfg.n_samples, cfg.seed)
    samples = evaluate_designs(model, samples)
    return model, prior, samples, space


def _out_stem(cfg: StudyConfig, override: Optional[str]) -> str:
    stem = override or cfg.output
    if not stem:
        raise ValidationError("output", "no output path given (config or --output)")
    return stem


def run_command(
    command: str,
    cfg: StudyConfig,
    threads: int = 1,
    output: Optional[str] = None,
    quiet: bool = False,
) -> int:
    """Execute one CLI command; returns the process exit status."""

    def say(msg: str) -> None:
        if not quiet:
            print(msg)

    if command == "models":
        for name in MODEL_NAMES:
            print(name)
        return 0

    if command in ("eig", "oed"):
        stem = _out_stem(cfg, output)
        model, prior, samples, space = _prepare_study(cfg)
        summary: dict = {
            "command": command,
            "seed": cfg.seed,
            "n_samples": cfg.n_samples,
            "m_centers": cfg.m_centers if cfg.m_centers is not None else cfg.n_samples,
            "estimator": ESTIMATOR_FORM,
            "effective_config": cfg.effective_dict(),
        }
        if command == "oed" and cfg.oed_mode == "greedy":
            chosen_ids, step_reports = greedy_oed(
                samples, space, cfg.oed_k, cfg.noise, m_centers=cfg.m_centers,
                rule=cfg.kde_rule, floor=cfg.kde_floor, threads=threads)
            write_report(step_reports[0].rows, step_reports[0].ranking, stem + ".csv")
            summary.update(_report_summary(step_reports[0]))
            summary["greedy_steps"] = [
                {
                    "step": t + 1,
                    "chosen": cid,
                    "coords": list(map(list, space.candidates[cid].coords or [])),
                    "combined_eig": rep.row(cid).eig,
                }
                for t, (cid, rep) in enumerate(zip(chosen_ids, step_reports))
            ]
            summary["chosen"] = chosen_ids[0]
            summary["chosen_set"] = chosen_ids
            say(f"greedy picks: {chosen_ids}")
        else:
            report = rank_designs(
                samples, space, cfg.noise, m_centers=cfg.m_centers,
                rule=cfg.kde_rule, floor=cfg.kde_floor, threads=threads)
            write_report(report.rows, report.ranking, stem + ".csv")
            summary.update(_report_summary(report))
            if command == "oed":
                summary["chosen"] = exhaustive_oed(report)
            top = report.row(report.ranking[0])
            say(f"top design {top.design_id} eig={_fmt(top.eig)}"
                if top.ok else "no design could be evaluated")
        _atomic_write(stem + ".json", _json_text(summary))
        return 0

    if command == "infer":
        stem = _out_stem(cfg, output)
        if cfg.observed_center is None:
            raise ValidationError("observed.center", "required by the infer command")
        model, prior, samples, space = _prepare_study(cfg)
        if len(space) != 1:
            raise ValidationError("designs", "infer needs exactly one candidate design")
        design = space.candidates[0]
        if design.dims != len(cfg.observed_center):
            raise ValidationError(
                "observed.center",
                f"has {len(cfg.observed_center)} entries for a {design.dims}-dim design")
        center = np.asarray(cfg.observed_center)
        sigma = cfg.noise.sigma_at(center[None, :])[0]
        obs = ObservedDensity(center=center, sigma=sigma)
        dataspace = select_design(samples, design)
        pf = fit_push_forward(dataspace, cfg.kde_rule, cfg.kde_floor, design.id)
        ratios = posterior_ratios(pf, obs, dataspace)
        gain = kl_from_ratios(ratios, design_id=design.id, center=center)
        posterior = rejection_sample(ratios, cfg.seed)
        consistency: Optional[float] = None
        consistency_note = None
        if dataspace.dims <= 2:
            try:
                consistency = consistency_error(posterior, samples, design, obs)
            except TooFewAccepted as exc:
                consistency_note = str(exc)
        else:
            consistency_note = "data space above 2 dimensions"
        summary = {
            "command": "infer",
            "seed": cfg.seed,
            "n_samples": cfg.n_samples,
            "design_id": design.id,
            "observed_center": list(map(float, center)),
            "observed_sigma": list(map(float, sigma)),
            "norm_constant": ratios.norm_constant,
            "infeasible_data_normalized": ratios.infeasible_normalized,
            "information_gain": gain.value,
            "acceptance_rate": posterior.acceptance_rate,
            "n_accepted": int(posterior.n_accepted),
            "consistency_error": consistency,
            "consistency_note": consistency_note,
            "estimator": ESTIMATOR_FORM,
            "effective_config": cfg.effective_dict(),
        }
        _atomic_write(stem + ".json", _json_text(summary))
        header = ["sample_index"] + [f"param_{d}" for d in range(samples.params.shape[1])]
        lines = [",".join(header)]
        for idx in posterior.accepted_indices:
            lines.append(",".join([str(int(idx))] + [
                _fmt(v) for v in samples.params[idx]]))
        _atomic_write(stem + "_accepted.csv", "\n".join(lines) + "\n")
        say(f"information gain {_fmt(gain.value)} "
            f"(C={_fmt(ratios.norm_constant)}, accept={_fmt(posterior.acceptance_rate)})")
        return 0

    if command == "pushforward":
        stem = _out_stem(cfg, output)
        model, prior, samples, space = _prepare_study(cfg)
        if len(space) != 1:
            raise ValidationError("designs", "pushforward needs exactly one candidate design")
        design = space.candidates[0]
        dataspace = select_design(samples, design)
        if dataspace.dims > 2:
            raise ValidationError("designs", "pushforward grids are limited to 2 dimensions")
        pf = fit_push_forward(dataspace, cfg.kde_rule, cfg.kde_floor, design.id)
        grids = [np.linspace(lo, hi, 200) for lo, hi in dataspace.per_dim_range]
        if dataspace.dims == 1:
            pts = grids[0][:, None]
        else:
            g0, g1 = np.meshgrid(grids[0], grids[1], indexing="ij")
            pts = np.column_stack([g0.ravel(), g1.ravel()])
        dens = pf.kde.evaluate(pts)
        header = [f"x_{d}" for d in range(dataspace.dims)] + ["density"]
        lines = [",".join(header)]
        for row, d in zip(pts, dens):
            lines.append(",".join([_fmt(v) for v in row] + [_fmt(d)]))
        _atomic_write(stem + ".csv", "\n".join(lines) + "\n")
        say(f"wrote push-forward grid for design {design.id}")
        return 0

    raise ValidationError("command", f"unknown command {command!r}")


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pfoed",
        description="Experimental design by expected information gain over push-forward densities.",
    )
    parser.add_argument(
        "command", choices=["eig", "oed", "infer", "pushforward", "models"])
    parser.add_argument("--config", help="path to the study config (JSON)")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for design evaluation")
    parser.add_argument("--output", help="output path stem (overrides the config)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)

    try:
        if args.command == "models":
            return run_command("models", None, quiet=args.quiet)
        if not args.config:
            print("error: --config is required", file=sys.stderr)
            return 1
        cfg = load_config(args.config)
        return run_command(args.command, cfg, threads=max(1, args.threads),
                           output=args.output, quiet=args.quiet)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PfoedError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
