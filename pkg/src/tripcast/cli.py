"""Command-line driver: synthesize or ingest trip corpora, run experiments,
inspect saved state.

Exit codes: 0 ok, 1 usage error (bad flags, unknown config keys, bad values),
2 data error (missing or malformed inputs).
"""

import argparse
import csv
import json
import os
import re
import sys
from dataclasses import replace

from .config import RunConfig, parse_kv_file
from .ingest import (
    SynthSpec,
    extract_trips,
    filter_corpus,
    generate_synthetic,
    read_fixes_csv,
    read_trips_csv,
    sample_ground_truth,
    write_ground_truth,
    write_trips_csv,
)
from .pipeline import run_offline_user, run_online_user

__all__ = ["main"]


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; this interface reserves 2 for data
    # errors, so usage problems are remapped to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _add_common(p):
    p.add_argument("--config", metavar="PATH", help="key=value config file")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                   dest="overrides", help="override one config key (repeatable)")
    p.add_argument("--out", metavar="DIR", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=None, metavar="N",
                   help="override the configured random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tripcast",
                     description="stream trip histories into destination "
                                 "clusters and next-destination predictions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="extract and filter trips from raw GPS fixes")
    p.add_argument("fixes", help="raw fix CSV (user_id,t,lat,lon,speed_kmh)")
    _add_common(p)

    p = sub.add_parser("synth", help="generate a synthetic trip corpus")
    p.add_argument("spec", nargs="?", help="key=value corpus spec file "
                                           "(defaults when omitted)")
    _add_common(p)

    p = sub.add_parser("run", help="run the prediction experiment over a trip CSV")
    p.add_argument("trips", help="trip CSV as written by ingest or synth")
    _add_common(p)

    p = sub.add_parser("inspect", help="summarize a saved state snapshot")
    p.add_argument("snapshot", help="state JSON written by run")
    _add_common(p)

    return parser


def _load_config(args) -> RunConfig:
    config = RunConfig()
    try:
        if args.config:
            config.apply(parse_kv_file(args.config))
        for item in args.overrides:
            if "=" not in item:
                raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            config.apply({key.strip(): value.strip()})
        if args.seed is not None:
            config.seed = args.seed
        config.validate()
    except OSError as exc:
        raise DataError(f"cannot read config: {exc}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return config


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _safe_name(user_id: str) -> str:
    return re.sub(r"[^-._A-Za-z0-9]", "_", user_id) or "_"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args, config: RunConfig) -> int:
    try:
        fixes, skipped = read_fixes_csv(args.fixes)
    except OSError as exc:
        raise DataError(str(exc)) from exc
    except ValueError as exc:
        raise DataError(str(exc)) from exc

    by_user: dict[str, list] = {}
    for f in fixes:
        by_user.setdefault(f.user_id, []).append(f)
    extracted = []
    for user in sorted(by_user):
        extracted.extend(extract_trips(by_user[user], fix_gap=config.fix_gap,
                                       distance_mode=config.distance_mode))
    kept = filter_corpus(extracted)

    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "trips.csv")
    write_trips_csv(kept, out_path)

    def ratio(n, total):
        base = f"{n} of {total}"
        return base + (f" ({100.0 * n / total:.1f}%)" if total else "")

    users_in = len(by_user)
    users_out = len({t.user_id for t in kept})
    print(f"skipped {skipped} malformed rows")
    print(f"retained {ratio(len(kept), len(extracted))} trips, "
          f"{ratio(users_out, users_in)} users")
    print(f"wrote {len(kept)} trips to {out_path}")
    return 0


def cmd_synth(args, config: RunConfig) -> int:
    try:
        mapping = parse_kv_file(args.spec) if args.spec else {}
    except OSError as exc:
        raise DataError(f"cannot read spec: {exc}") from exc
    try:
        spec = SynthSpec.from_mapping(mapping)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)

    truths = sample_ground_truth(spec)
    trips, labels = generate_synthetic(truths, spec.seed)

    os.makedirs(args.out, exist_ok=True)
    trips_path = os.path.join(args.out, "trips.csv")
    truth_path = os.path.join(args.out, "truth.json")
    write_trips_csv(trips, trips_path)
    write_ground_truth(truths, labels, truth_path)
    print(f"generated {spec.users} users x {spec.trips_per_user} trips "
          f"(seed {spec.seed})")
    print(f"wrote {trips_path} and {truth_path}")
    return 0


ACCURACY_HEADER = ["user_id", "model", "variant", "acc_all", "acc_clustered"]
AGREEMENT_HEADER = ["user_id", "step", "ami", "ari", "v_measure"]
AGREEMENT_FINAL_HEADER = ["user_id", "ami", "ari", "v_measure"]
REGRET_HEADER = ["user_id", "source_label", "step", "h2", "h2_d", "h2_s",
                 "cum_regret", "cum_h2_d", "cum_h2_s"]


def cmd_run(args, config: RunConfig) -> int:
    try:
        trips = read_trips_csv(args.trips)
    except OSError as exc:
        raise DataError(str(exc)) from exc
    except ValueError as exc:
        raise DataError(str(exc)) from exc

    by_user: dict[str, list] = {}
    for t in trips:
        by_user.setdefault(t.user_id, []).append(t)
    users = sorted(by_user)

    os.makedirs(args.out, exist_ok=True)
    state_dir = os.path.join(args.out, "state")
    os.makedirs(state_dir, exist_ok=True)

    def dump_state(user_id, snapshot):
        path = os.path.join(state_dir, f"{_safe_name(user_id)}.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(snapshot, fh, sort_keys=True, indent=2)
            fh.write("\n")

    acc_rows = []

    if config.variant == "offline":
        for user in users:
            res = run_offline_user(by_user[user], config, user)
            for name, (acc_all, acc_clustered) in res.accuracy.items():
                acc_rows.append([user, name, "offline", _num(acc_all),
                                 _num(acc_clustered)])
            dump_state(user, res.snapshot)
        _write_csv(os.path.join(args.out, "accuracy.csv"), ACCURACY_HEADER, acc_rows)
        print(f"ran {len(users)} users (variant offline)")
        print(f"wrote accuracy.csv and {len(users)} state snapshots to {args.out}")
        return 0

    model_names = config.model_list()
    agree_rows = []
    agree_final_rows = []
    regret_rows = {name: [] for name in model_names}
    preds_path = os.path.join(args.out, "predictions.jsonl")
    with open(preds_path, "w", encoding="utf-8") as preds:
        for user in users:
            res = run_online_user(by_user[user], config, user)
            for name in model_names:
                acc_all, acc_clustered = res.accuracy[name]
                acc_rows.append([user, name, config.variant, _num(acc_all),
                                 _num(acc_clustered)])
                for row in res.regret[name]:
                    regret_rows[name].append([
                        row["user_id"], row["source_label"], row["step"],
                        _num(row["h2"]), _num(row["h2_d"]), _num(row["h2_s"]),
                        _num(row["cum_regret"]), _num(row["cum_h2_d"]),
                        _num(row["cum_h2_s"]),
                    ])
            for step, scores in res.agreement:
                agree_rows.append([user, step, _num(scores.ami),
                                   _num(scores.ari), _num(scores.v_measure)])
            if res.agreement_final is not None:
                s = res.agreement_final
                agree_final_rows.append([user, _num(s.ami), _num(s.ari),
                                         _num(s.v_measure)])
            for rec in res.predictions:
                preds.write(json.dumps(rec, sort_keys=True,
                                       separators=(",", ":")) + "\n")
            dump_state(user, res.snapshot)

    _write_csv(os.path.join(args.out, "accuracy.csv"), ACCURACY_HEADER, acc_rows)
    _write_csv(os.path.join(args.out, "agreement.csv"), AGREEMENT_HEADER, agree_rows)
    _write_csv(os.path.join(args.out, "agreement_final.csv"),
               AGREEMENT_FINAL_HEADER, agree_final_rows)
    for name in model_names:
        _write_csv(os.path.join(args.out, f"regret_{name}.csv"), REGRET_HEADER,
                   regret_rows[name])
    print(f"ran {len(users)} users (variant {config.variant}, "
          f"models {','.join(model_names)})")
    print(f"wrote accuracy/agreement/regret CSVs, predictions.jsonl, and "
          f"{len(users)} state snapshots to {args.out}")
    return 0


def cmd_inspect(args) -> int:
    try:
        with open(args.snapshot, encoding="utf-8") as fh:
            snap = json.load(fh)
    except OSError as exc:
        raise DataError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt snapshot: {exc}") from exc
    if not isinstance(snap, dict):
        raise DataError("corrupt snapshot: top level is not an object")

    clusterer = snap.get("clusterer", snap)
    if not isinstance(clusterer, dict):
        raise DataError("corrupt snapshot: clusterer is not an object")
    user_id = snap.get("user_id")
    variant = snap.get("variant") or clusterer.get("variant")
    if user_id or variant:
        print(" ".join(filter(None, (f"user {user_id}" if user_id else "",
                                     f"variant {variant}" if variant else ""))))

    centroids = clusterer.get("centroids")
    offline_clusters = clusterer.get("clusters")
    if centroids:
        groups: dict[int, list[dict]] = {}
        for c in centroids:
            groups.setdefault(c["label"], []).append(c)
        print(f"{len(groups)} cluster{'s' if len(groups) != 1 else ''}")
        for lab in sorted(groups):
            total = sum(c.get("count", 0) for c in groups[lab])
            line = f"  cluster {lab}: count {total}"
            radii = [c["radius"] for c in groups[lab] if "radius" in c]
            if len(radii) == 1 and len(groups[lab]) == 1:
                line += f", radius {radii[0]:.1f} m"
            elif len(groups[lab]) > 1:
                line += f" ({len(groups[lab])} centroids)"
            print(line)
        pending = clusterer.get("pending") or []
        if pending:
            print(f"{len(pending)} pending point{'s' if len(pending) != 1 else ''}")
    elif offline_clusters:
        print(f"{len(offline_clusters)} cluster"
              f"{'s' if len(offline_clusters) != 1 else ''}")
        for row in offline_clusters:
            print(f"  cluster {row['label']}: count {row['size']}")
    else:
        print("0 clusters")

    models = snap.get("models") or {}
    for name in sorted(models):
        m = models[name]
        table = m.get("global")
        kind = m.get("kind", "?")
        print(f"model {name} ({kind}): global "
              f"{json.dumps(table, sort_keys=True)}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "inspect":
            return cmd_inspect(args)
        config = _load_config(args)
        if args.command == "ingest":
            return cmd_ingest(args, config)
        if args.command == "synth":
            return cmd_synth(args, config)
        return cmd_run(args, config)
    except UsageError as exc:
        sys.stderr.write(f"tripcast: usage error: {exc}\n")
        return 1
    except DataError as exc:
        sys.stderr.write(f"tripcast: error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
