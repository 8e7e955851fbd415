"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 zero forcing infeasible,
3 unexpected failure.  Errors are reported as a JSON object on stderr and
in ``error.json`` in the output directory.  User numbers in every output
file are 1-based.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .array_channel import phase_correlation
from .errors import DegenerateChannelError, InfeasibleZFError, InvalidArgumentError
from .evaluation import (MU_DESIGNS, SU_DESIGNS, coherent_slnr_beamformers, design_su,
                         evaluate_coherent_su, evaluate_mu, evaluate_su, frequency_sweep,
                         mu_cdf_study, mu_sinr, su_cdf_study, to_db)
from .mu import design_all, zf_feasibility
from .report import cdf_rows, write_cdf_csv, write_json, write_sweep_csv
from .scenario import ScenarioConfig, generate_scenario, generate_user_pool
from .su import WorstCaseOptions, coherent_bf, uniform_bf

log = logging.getLogger("noncobf")

COMMANDS = ("design-su", "design-mu", "sweep", "cdf-study")
DEFAULT_DESIGNS = {
    "design-su": SU_DESIGNS,
    "design-mu": ("coherent", "zf-stationary", "zf-worstcase", "rzf"),
    "sweep": SU_DESIGNS,
    "cdf-study": None,  # depends on num_users
}


class ConfigError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="noncobf",
                                description="Non-coherent downlink beamforming experiments")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="scenario config (JSON)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field (dotted keys for nested fields); repeatable")
    p.add_argument("--designs", help="comma-separated list of " + ",".join(MU_DESIGNS))
    p.add_argument("--draws", type=int, default=10_000, help="Monte-Carlo phase draws")
    p.add_argument("--freq-points", type=int, help="frequency points across the band")
    p.add_argument("--user", type=int, default=1, help="user (1-based) for sweep")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _apply_override(data: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = data
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {key!r}: {part!r} is not a mapping")
    node[parts[-1]] = value


def load_config(args) -> ScenarioConfig:
    data: dict = {}
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for item in args.overrides:
        _apply_override(data, item)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.freq_points is not None:
        data["num_subcarriers"] = args.freq_points
    try:
        return ScenarioConfig.from_dict(data)
    except InvalidArgumentError as exc:
        raise ConfigError(str(exc)) from exc


def parse_designs(args, cfg: ScenarioConfig) -> tuple[str, ...]:
    if args.designs:
        designs = tuple(d.strip() for d in args.designs.split(",") if d.strip())
    else:
        designs = DEFAULT_DESIGNS[args.command]
        if designs is None:
            designs = SU_DESIGNS if cfg.num_users == 1 else \
                ("coherent", "uniform", "stationary", "zf-stationary", "rzf")
    allowed = MU_DESIGNS if args.command in ("design-mu",) or \
        (args.command == "cdf-study" and cfg.num_users > 1) else SU_DESIGNS
    unknown = [d for d in designs if d not in allowed]
    if unknown or not designs:
        raise ConfigError(f"unsupported designs for {args.command}: {unknown or 'none'}; "
                          f"choose from {','.join(allowed)}")
    return designs


def metadata(args, cfg: ScenarioConfig, designs) -> dict:
    return {"command": args.command, "seed": cfg.seed, "config_hash": cfg.digest(),
            "designs": list(designs), "draws": args.draws, "version": __version__,
            "config": cfg.to_dict()}


def _summary(bf) -> dict:
    diag = {k: v for k, v in bf.diagnostics.items() if k != "runs"}
    runs = bf.diagnostics.get("runs")
    if runs is not None:
        diag["num_runs"] = len(runs)
        diag["all_converged"] = all(r["converged"] for r in runs)
        diag["total_iterations"] = sum(r["iterations"] for r in runs)
    return diag


def _weights(g) -> list:
    return [[z.real, z.imag] for z in np.asarray(g)]


def run_design_su(args, cfg, designs, out: Path) -> dict:
    scen = generate_scenario(cfg)
    fc = cfg.carrier_frequency
    opts = WorstCaseOptions(seed=cfg.seed)
    streams = np.random.SeedSequence([cfg.seed, 2]).spawn(scen.num_users)
    users = []
    for k in range(scen.num_users):
        A = scen.signatures(k, fc)
        model = scen.phase_model(k, fc)
        R = phase_correlation(model)
        h = scen.channel(k, fc)
        entry = {"user": k + 1, "num_paths": A.num_paths, "designs": {}}
        for d in designs:
            rng = np.random.default_rng(streams[k].spawn(len(designs))[designs.index(d)])
            if d == "coherent":
                bf = coherent_bf(h)
                rec = evaluate_coherent_su(A, model, args.draws, rng)
            else:
                bf = design_su(d, A, R, opts)
                rec = evaluate_su(bf, A, model, args.draws, rng)
            entry["designs"][d] = {
                "stationary_gain_db": to_db(rec.stationary_gain),
                "worst_case_gain_db": None if rec.worst_case_gain is None
                else to_db(rec.worst_case_gain),
                "mc_mean_gain_db": to_db(rec.mean_gain) if args.draws else None,
                "mc_min_gain_db": to_db(np.min(rec.samples)) if args.draws else None,
                "realized_gain_db": to_db(abs(np.vdot(bf.g, h)) ** 2),
                "objective_value": bf.objective_value,
                "diagnostics": _summary(bf),
                "weights": _weights(bf.g),
            }
        users.append(entry)
    report = {"metadata": metadata(args, cfg, designs), "users": users}
    write_json(out / "design_su.json", report)
    return report


def run_design_mu(args, cfg, designs, out: Path) -> dict:
    scen = generate_scenario(cfg)
    fc = cfg.carrier_frequency
    mus = scen.at_frequency(fc)
    feas = [dict(r, user=r["user"] + 1) for r in zf_feasibility(mus)]
    report = {"metadata": metadata(args, cfg, designs), "feasibility": feas, "designs": {}}
    blocked = [r["user"] for r in feas if not r["feasible"]]
    if blocked and any(d.startswith("zf") for d in designs):
        write_json(out / "design_mu.json", report)
        exc = InfeasibleZFError(blocked[0] - 1, "zero forcing infeasible for user(s) "
                                + ", ".join(str(u) for u in blocked))
        exc.blocked = blocked
        raise exc
    opts = WorstCaseOptions(seed=cfg.seed)
    H = np.stack([scen.channel(k, fc) for k in range(mus.num_users)], axis=1)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 3]))
    for d in designs:
        if d == "coherent":
            G = coherent_slnr_beamformers(H, mus.noise_variance / mus.symbol_powers)
            bfs, recs = None, None
        elif d == "uniform":
            g = uniform_bf(mus.num_antennas).g
            G = np.tile(g[:, None], (1, mus.num_users))
            bfs, recs = None, evaluate_mu(mus, list(G.T), args.draws, rng)
        else:
            bfs = design_all(mus, d, opts)
            G = np.stack([b.g for b in bfs], axis=1)
            recs = evaluate_mu(mus, bfs, args.draws, rng)
        realized = mu_sinr(H, G, mus.symbol_powers, mus.noise_variance)
        per_user = []
        for k in range(mus.num_users):
            item = {"user": k + 1, "realized_sinr_db": to_db(realized[k]),
                    "weights": _weights(G[:, k])}
            if recs is not None:
                item["stationary_sinr_db"] = to_db(recs[k].stationary_sinr)
                if args.draws:
                    item["mc_mean_sinr_db"] = to_db(np.mean(recs[k].sinr))
                    item["mc_p05_sinr_db"] = to_db(np.quantile(recs[k].sinr, 0.05))
                    item["mc_max_interference"] = float(np.max(recs[k].interference))
            if bfs is not None:
                item["objective_value"] = bfs[k].objective_value
                item["diagnostics"] = _summary(bfs[k])
            per_user.append(item)
        report["designs"][d] = per_user
    write_json(out / "design_mu.json", report)
    return report


def run_sweep(args, cfg, designs, out: Path) -> dict:
    scen = generate_scenario(cfg)
    if not 1 <= args.user <= scen.num_users:
        raise ConfigError(f"--user must be in 1..{scen.num_users}")
    n = cfg.num_subcarriers
    if n < 2:
        raise ConfigError("sweep needs at least 2 frequency points")
    rows = frequency_sweep(scen, designs, n, args.user - 1, WorstCaseOptions(seed=cfg.seed))
    write_sweep_csv(out / "sweep.csv", rows)
    meta = dict(metadata(args, cfg, designs), user=args.user, rows=len(rows))
    write_json(out / "sweep_meta.json", meta)
    return meta


def run_cdf_study(args, cfg, designs, out: Path) -> dict:
    pool = generate_user_pool(cfg, cfg.num_locations if cfg.users is None else cfg.num_users)
    opts = WorstCaseOptions(seed=cfg.seed)
    n = cfg.num_subcarriers
    if cfg.num_users == 1:
        study = su_cdf_study(pool, designs, n, opts)
    else:
        study = mu_cdf_study(pool, designs, n, opts)
    rows = cdf_rows(study, designs)
    write_cdf_csv(out / "cdf.csv", rows)
    meta = dict(metadata(args, cfg, designs), metric=study.metric,
                rows_per_design={d: len(study.rows[d]) for d in designs},
                median_db={d: study.median_db(d) for d in designs if study.rows[d]},
                infeasible=[dict(r, user=r["user"] + 1,
                                 selection=[u + 1 for u in r["selection"]])
                            for r in study.infeasible])
    write_json(out / "cdf_meta.json", meta)
    return meta


RUNNERS = {"design-su": run_design_su, "design-mu": run_design_mu,
           "sweep": run_sweep, "cdf-study": run_cdf_study}


def _fail(out: Path | None, code: int, payload: dict) -> int:
    text = json.dumps(payload, sort_keys=True)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text + "\n")
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = args.out
    try:
        cfg = load_config(args)
        designs = parse_designs(args, cfg)
        if args.draws < 0:
            raise ConfigError("--draws must be >= 0")
        out.mkdir(parents=True, exist_ok=True)
        stale = out / "error.json"
        if stale.exists():
            stale.unlink()
        log.info("running %s with seed %d", args.command, cfg.seed)
        RUNNERS[args.command](args, cfg, designs, out)
    except ConfigError as exc:
        return _fail(out, 1, {"error": "config", "message": str(exc)})
    except InfeasibleZFError as exc:
        return _fail(out, 2, {"error": "zf-infeasible", "message": str(exc),
                              "blocked_users": getattr(exc, "blocked", [exc.user + 1])})
    except (InvalidArgumentError, DegenerateChannelError) as exc:
        return _fail(out, 1, {"error": "invalid-argument", "message": str(exc)})
    except Exception as exc:  # noqa: BLE001
        log.exception("unexpected failure")
        return _fail(out, 3, {"error": "internal", "message": f"{type(exc).__name__}: {exc}"})
    return 0


if __name__ == "__main__":
    sys.exit(main())
