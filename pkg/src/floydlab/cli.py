"""Batch front end: ``floydlab build|verify|floyd``.

Exit codes: 0 pass, 1 fail (findings), 2 inconclusive (budget), 3 error.
Every artifact carries the config hash; inputs with a different hash are
refused.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys
from fractions import Fraction
from pathlib import Path

from .amalgam import DoublePresentation, build_relator, verify_cyclic_geodesic
from .config import ConfigError, RunConfig
from .construction import ConstructionError, ConstructionOverflow, ConstructionState, build_stage
from .floyd import (WeightedBall, collapse_experiment, ray_is_floyd_geodesic, ray_prefix,
                    separation_experiment)
from .smallcancel import (GradedRose, check_GSC_schedule, check_RSC, graded_cp_check,
                          malnormal_by_graded_c5, standard_schedule, property4_check)
from .stallings import is_malnormal
from .words import AlphabetError, DegenerateInputError, MagnitudeError, format_word, parse_word

PASS, FAIL, INCONCLUSIVE, ERROR = 0, 1, 2, 3
CHECKS = ("malnormal", "c5", "relators", "rsc", "gsc", "property4")
EXPERIMENTS = ("decay", "separation", "raycheck")


class MixedHashError(RuntimeError):
    pass


def _combine(statuses) -> int:
    statuses = list(statuses)
    if FAIL in statuses:
        return FAIL
    if INCONCLUSIVE in statuses:
        return INCONCLUSIVE
    return PASS


def _status_name(code: int) -> str:
    return {PASS: "pass", FAIL: "fail", INCONCLUSIVE: "inconclusive", ERROR: "error"}[code]


def write_json(path: Path, obj: dict, cfg: RunConfig) -> None:
    obj = {"config_hash": cfg.hash(), **obj}
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


def write_csv(path: Path, rows: list[dict], cfg: RunConfig) -> None:
    h = cfg.hash()
    fieldnames = ["config_hash"] + (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({"config_hash": h, **r})


def read_artifact(path: Path, cfg: RunConfig) -> dict:
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; run `floydlab build` first")
    data = json.loads(path.read_text())
    if data.get("config_hash") != cfg.hash():
        raise MixedHashError(f"{path} was produced under config {data.get('config_hash')}, "
                             f"current config is {cfg.hash()}")
    return data


# --- build ----------------------------------------------------------------------------------

def cmd_build(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        state = build_stage(cfg.stages, cfg.growth(), cfg.seed_word())
    except ConstructionOverflow as exc:
        write_json(out / "construction.json", {
            "config": cfg.to_dict(), "construction": exc.partial.to_json(),
            "overflow": {"stage": exc.stage, "cause": str(exc.cause or exc)},
            "all_checks_pass": False}, cfg)
        print(f"overflow while building stage {exc.stage}; partial dump written", file=sys.stderr)
        return FAIL
    ok = state.all_checks_pass()
    write_json(out / "construction.json", {"config": cfg.to_dict(), "construction": state.to_json(),
                                           "all_checks_pass": ok}, cfg)
    print(f"built {state.stage} stages ({'all checks pass' if ok else 'checks failing'})")
    return PASS if ok else FAIL


def load_state(cfg: RunConfig) -> ConstructionState:
    data = read_artifact(Path(cfg.out) / "construction.json", cfg)
    stages = data["construction"]["stages"]
    state = build_stage(len(stages), cfg.growth(), cfg.seed_word())
    for rec, st in zip(state.records, stages):
        if format_word(rec.g) != st["g"]:
            raise ConfigError(f"construction.json disagrees with a rebuild at stage {st['stage']}")
    return state


# --- verify ---------------------------------------------------------------------------------

def _presentation(state, n: int) -> DoublePresentation:
    return DoublePresentation.trivial() if n == 0 else DoublePresentation.from_state(state, n)


def check_malnormal(state, cfg) -> tuple[int, dict]:
    rows, status = [], PASS
    for i in range(1, state.stage + 1):
        K = state.K(i)
        cert = is_malnormal(K)
        c5 = malnormal_by_graded_c5(state, i)
        agree = c5 is None or c5 == cert.verdict
        rows.append({"stage": i, "certificate": cert.to_json(), "certificate_verifies": cert.verify(K),
                     "graded_c5": c5, "routes_agree": agree})
        if not (cert.verdict and agree and cert.verify(K)):
            status = FAIL
    return status, {"stages": rows}


def check_c5(state, cfg) -> tuple[int, dict]:
    rep = graded_cp_check(GradedRose.from_state(state), 5)
    return (PASS if rep.verdict else FAIL), rep.to_json()


def check_relators(state, cfg) -> tuple[int, dict]:
    rows, statuses = [], []
    for n in range(1, state.stage + 1):
        R = build_relator(n, state)
        rep = verify_cyclic_geodesic(R, _presentation(state, n - 1))
        statuses.append(PASS if rep.ok else (INCONCLUSIVE if rep.inconclusive else FAIL))
        rows.append({"relator": R.to_json(), "geodesic": rep.to_json()})
    return _combine(statuses), {"relators": rows}


def check_rsc(state, cfg) -> tuple[int, dict]:
    rows, statuses = [], []
    for n in range(1, state.stage + 1):
        R = build_relator(n, state)
        rep = check_RSC([R.word], cfg.rsc_eps, Fraction(cfg.rsc_mu), R.length,
                        _presentation(state, n - 1), cfg.ball_budget, cfg.piece_work)
        statuses.append({"pass": PASS, "fail": FAIL, "inconclusive": INCONCLUSIVE}[rep.verdict])
        rows.append({"stage": n, **rep.to_json()})
    return _combine(statuses), {"grades": rows}


def check_gsc(state, cfg) -> tuple[int, dict]:
    lengths = [build_relator(n, state).length for n in range(1, state.stage + 1)]
    k = cfg.base_stage
    if len(lengths) <= k:
        return INCONCLUSIVE, {"note": f"need more than {k} stages for the schedule"}
    params = standard_schedule(lengths, [state.schedule(n) for n in range(1, state.stage + 1)], k)
    params.alpha, params.K = Fraction(cfg.alpha), cfg.K
    rep = check_GSC_schedule([[L] for L in lengths[k:]], params)
    bad = any(v == "fail" for v in rep.clauses.values())
    return (FAIL if bad else PASS), {"params": params.to_json(), **rep.to_json()}


def check_property4(state, cfg) -> tuple[int, dict]:
    rows, statuses = [], []
    for n in range(1, state.stage + 1):
        R = build_relator(n, state)
        N = None if n == 1 else state.exponents[n - 2]
        rep = property4_check(R, state.schedule, N)
        statuses.append(FAIL if rep.verdict == "fail" else PASS)
        rows.append(rep.to_json())
    return _combine(statuses), {"relators": rows}


CHECK_FUNCS = {"malnormal": check_malnormal, "c5": check_c5, "relators": check_relators,
               "rsc": check_rsc, "gsc": check_gsc, "property4": check_property4}


def cmd_verify(cfg: RunConfig, which) -> int:
    state = load_state(cfg)
    out = Path(cfg.out)
    statuses = []
    for name in which:
        status, payload = CHECK_FUNCS[name](state, cfg)
        write_json(out / f"cert-{name}.json", {"check": name, "status": _status_name(status),
                                               "result": payload}, cfg)
        print(f"{name}: {_status_name(status)}")
        statuses.append(status)
    return _combine(statuses)


# --- floyd ------------------------------------------------------------------------------------

def _state_for_floyd(cfg: RunConfig) -> ConstructionState:
    if (Path(cfg.out) / "construction.json").exists():
        return load_state(cfg)
    return build_stage(cfg.stages, cfg.growth(), cfg.seed_word())


def cmd_floyd(cfg: RunConfig, which) -> int:
    state = _state_for_floyd(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    f = cfg.scaling_function()
    results, statuses = {}, []
    for name in which:
        if name == "decay":
            stages = [s for s in cfg.decay_stages if s <= state.stage]
            table = collapse_experiment(state, stages, f)
            write_csv(out / "decay.csv", table.rows(), cfg)
            status = PASS if table.consistent() else FAIL
        elif name == "separation":
            table = separation_experiment(state, cfg.depths, cfg.kappas, f, radius=cfg.radius,
                                          stage=cfg.separation_stage, budget=cfg.search_budget)
            write_csv(out / "separation.csv", table.rows(), cfg)
            write_json(out / "cert-separation.json", {
                "radius": table.radius,
                "cells": [{**c.row(), "certificate": c.result.certificate} for c in table.cells]}, cfg)
            if table.consistent():
                status = PASS
            else:
                status = INCONCLUSIVE if table.inconclusive_fraction() >= 0.2 else FAIL
        else:
            P = DoublePresentation.from_state(state, cfg.separation_stage)
            B = WeightedBall.amalgam(P, cfg.radius, f, budget=cfg.ball_budget)
            rows = []
            for word, depth in cfg.rays:
                rep = ray_is_floyd_geodesic(ray_prefix(parse_word(word), depth), B)
                rows.append({"ray": word, "depth": depth, **rep.to_json()})
            write_csv(out / "raycheck.csv", rows, cfg)
            status = PASS if all(r["verdict"] for r in rows) else FAIL
        results[name] = {"status": _status_name(status), "file": f"{name}.csv"}
        print(f"{name}: {_status_name(status)}")
        statuses.append(status)
    write_json(out / "manifest.json", {
        "config": cfg.to_dict(), "experiments": results, "scaling": f.to_json(),
        "schedule": state.schedule.to_dict(), "radius": cfg.radius, "seeds": {},
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat()}, cfg)
    return _combine(statuses)


# --- entry point ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--stage", type=int, help="number of construction stages")
    common.add_argument("--schedule", help="tower, affine, or a JSON file with a schedule")
    common.add_argument("--radius", type=int, help="ball radius for Floyd computations")
    common.add_argument("--kappa", type=int, nargs="+", help="quasigeodesic constants")
    common.add_argument("--out", help="output directory")
    p = argparse.ArgumentParser(prog="floydlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="build construction stages")
    v = sub.add_parser("verify", parents=[common], help="run certificate checks")
    v.add_argument("--check", nargs="+", choices=CHECKS, default=list(CHECKS))
    fl = sub.add_parser("floyd", parents=[common], help="run Floyd experiments")
    fl.add_argument("--experiment", nargs="+", choices=EXPERIMENTS, default=list(EXPERIMENTS))
    return p


def resolve_config(args) -> RunConfig:
    d = RunConfig.load(args.config).to_dict() if args.config else RunConfig().to_dict()
    if args.stage is not None:
        d["stages"] = args.stage
    if args.schedule is not None:
        if args.schedule == "tower":
            d["schedule"] = {"kind": "tower"}
        elif args.schedule == "affine":
            d["schedule"] = {"kind": "affine", "slope": 1, "offset": 1}
        else:
            d["schedule"] = json.loads(Path(args.schedule).read_text())
    if args.radius is not None:
        d["radius"] = args.radius
    if args.kappa is not None:
        d["kappas"] = args.kappa
    if args.out is not None:
        d["out"] = args.out
    return RunConfig.from_dict(d)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "build":
            return cmd_build(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.check)
        return cmd_floyd(cfg, args.experiment)
    except (ConfigError, ConstructionError, DegenerateInputError, AlphabetError, MagnitudeError,
            MixedHashError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
