"""Command-line front end for the band-mapping and allocation tools.

Five subcommands: ``map`` prints the bin-to-subcarrier permutation,
``alloc`` places a batch of requests, ``sim`` runs a blocking-probability
sweep from a JSON config into a CSV file, ``states`` counts Markov states,
and ``wave`` cross-checks waveform synthesis.  Exit codes are stable:
0 success, 2 usage or config error, 3 infeasible allocation (``wave``
returns 1 when a numeric check fails).

With ``--json`` every subcommand emits a canonical JSON document
(``indent=2, sort_keys=True``) so that parse + re-render is the identity.
"""

from __future__ import annotations

import argparse
import json
import sys
from random import Random
from typing import Sequence

import numpy as np

from .allocator import (
    MIN_SMALL_CHANGE,
    SORT_FIRST,
    BatchRejected,
    BinState,
    Request,
    admit_multistream,
    allocate_batch_sync,
    dcr_state,
)
from .mapping import RadixScheme, bin_digits, digit_reverse
from .sim import build_configs, sweep, write_csv
from .statespace import (
    FINE_ENUM_CAP,
    REACHABLE_CAP,
    enumerate_fine,
    enumerate_super,
    f_rec,
    g_rec,
    reachable_states,
)
from .waveform import StreamSpec, stream_freq_oracle, stream_time

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BLOCKED = 3

EQUIV_TOL = 1e-9
ENVELOPE_TOL = 1e-12

_POLICY_FLAGS = {"sort-first": SORT_FIRST, "min-small-change": MIN_SMALL_CHANGE}


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _emit_json(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _scheme_from(args: argparse.Namespace) -> RadixScheme:
    if args.radices is not None:
        parts = [p for p in args.radices.split(",") if p.strip()]
        if not parts:
            raise ValueError("--radices needs a comma-separated list, e.g. 2,2,3")
        return RadixScheme(tuple(int(p) for p in parts))
    return RadixScheme.power_of_two(args.m)


# -- map ---------------------------------------------------------------------


def _digit_str(digits: tuple[int, ...]) -> str:
    if not digits:
        return "-"
    if any(d > 9 for d in digits):
        return ".".join(str(d) for d in digits)
    return "".join(str(d) for d in digits)


def _print_table(rows: list[dict], columns: list[str]) -> None:
    table = [list(columns)] + [[str(r[c]) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(columns))]
    for row in table:
        print("  ".join(x.ljust(w) for x, w in zip(row, widths)).rstrip())


def cmd_map(args: argparse.Namespace) -> int:
    try:
        scheme = _scheme_from(args)
        if args.index is not None and not 0 <= args.index < scheme.size:
            raise ValueError(
                f"--index {args.index} out of range for band size {scheme.size}"
            )
    except ValueError as exc:
        return _fail(str(exc))
    ks = [args.index] if args.index is not None else list(range(scheme.size))
    rows = []
    for k in ks:
        digits = bin_digits(k, scheme)
        rows.append({
            "bin": k,
            "digits": _digit_str(digits),
            "reversal": _digit_str(digits[::-1]),
            "subcarrier": digit_reverse(k, scheme),
        })
    if args.json:
        _emit_json(rows)
    else:
        _print_table(rows, ["bin", "digits", "reversal", "subcarrier"])
    return EXIT_OK


# -- alloc -------------------------------------------------------------------


def _parse_requests(spec: str) -> list[tuple[str, int]]:
    if spec.startswith("@"):
        with open(spec[1:], encoding="utf-8") as fh:
            data = json.load(fh)
        if isinstance(data, dict):
            items = [(str(name), size) for name, size in data.items()]
        elif isinstance(data, list):
            items = [(str(d["name"]), d["size"]) for d in data]
        else:
            raise ValueError("requests file must hold an object or a list")
    else:
        items = []
        for part in spec.split(","):
            name, sep, size = part.partition(":")
            name = name.strip()
            if not sep or not name:
                raise ValueError(f"bad request {part!r}, want name:size")
            items.append((name, int(size)))
    names = [name for name, _ in items]
    if len(set(names)) != len(names):
        raise ValueError("request names must be unique")
    for name, size in items:
        if not isinstance(size, int) or size < 1:
            raise ValueError(f"request {name!r} needs a positive integer size")
    return items


def _range_str(ranges) -> str:
    parts = []
    for r in ranges:
        parts.append(str(r.start) if r.size == 1 else f"{r.start}-{r.stop - 1}")
    return ",".join(parts)


def cmd_alloc(args: argparse.Namespace) -> int:
    try:
        scheme = _scheme_from(args)
        items = _parse_requests(args.requests)
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        return _fail(str(exc))

    policy = _POLICY_FLAGS[args.policy] if args.policy else None
    if args.multistream and args.policy:
        return _fail("--multistream gathers blocks itself; drop --policy")
    if args.dc is not None:
        if policy == SORT_FIRST:
            return _fail("sort-first packs a clean band; use min-small-change with --dc")
        if policy is None:
            policy = MIN_SMALL_CHANGE
    elif policy is None:
        policy = SORT_FIRST

    try:
        if args.dc is not None:
            state = dcr_state(scheme, args.dc)
        else:
            state = BinState(scheme)
    except ValueError as exc:
        return _fail(str(exc))

    requests = [Request(i, size) for i, (_, size) in enumerate(items)]
    try:
        if args.multistream:
            allocations = []
            for req in requests:
                outcome = admit_multistream(state, req)
                if not outcome.granted:
                    print(
                        f"error: request {items[req.id][0]!r} of size {req.size} "
                        f"blocked ({outcome.status.value})",
                        file=sys.stderr,
                    )
                    return EXIT_BLOCKED
                allocations.append(outcome.allocation)
        else:
            allocations = allocate_batch_sync(requests, policy, state=state)
    except BatchRejected as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BLOCKED
    except ValueError as exc:
        return _fail(str(exc))

    rows = []
    for (name, size), alloc in zip(items, allocations):
        subs = sorted(alloc.subcarriers)
        rows.append({
            "name": name,
            "size": size,
            "bins": _range_str(alloc.ranges),
            "subcarriers": ",".join(str(s) for s in subs),
            "_bins_list": sorted(b for r in alloc.ranges for b in r.bins()),
            "_subs_list": subs,
        })
    if args.json:
        _emit_json([
            {"name": r["name"], "size": r["size"], "bins": r["_bins_list"],
             "subcarriers": r["_subs_list"]}
            for r in rows
        ])
    else:
        _print_table(rows, ["name", "size", "bins", "subcarriers"])
    return EXIT_OK


# -- sim ---------------------------------------------------------------------


def cmd_sim(args: argparse.Namespace) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(f"cannot read config {args.config}: {exc}")
    try:
        configs = build_configs(doc)
    except (ValueError, TypeError) as exc:
        return _fail(f"bad config: {exc}")

    results = sweep(configs)
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_csv(results, fh)
    except OSError as exc:
        return _fail(f"cannot write {args.out}: {exc}")

    if args.json:
        _emit_json([
            {"policy": mt.policy, "mix": mt.mix, "G": mt.G, "P_B": mt.P_B,
             "P_B_ci": mt.P_B_ci, "P_f": mt.P_f, "P_f_ci": mt.P_f_ci, "S": mt.S,
             "seed": mt.seed, "replications": mt.replications}
            for mt in results
        ])
    else:
        for mt in results:
            print(
                f"{mt.policy} {mt.mix} G={mt.G:g}: "
                f"P_B={mt.P_B:.4f}±{mt.P_B_ci:.4f} "
                f"P_f={mt.P_f:.4f}±{mt.P_f_ci:.4f} S={mt.S:.4f}"
            )
        print(f"wrote {len(results)} rows to {args.out}")
    return EXIT_OK


# -- states ------------------------------------------------------------------


def cmd_states(args: argparse.Namespace) -> int:
    m, mode = args.m, args.mode
    if m < 0:
        return _fail(f"m must be >= 0, got {m}")
    payload: dict = {"m": m, "mode": mode}
    if mode in ("fine", "super"):
        try:
            recurrence = f_rec(m) if mode == "fine" else g_rec(m)
        except ValueError as exc:
            return _fail(str(exc))
        payload["recurrence"] = recurrence
        if m <= FINE_ENUM_CAP:
            count = enumerate_fine(m) if mode == "fine" else enumerate_super(m)
            verdict = "AGREE" if count == recurrence else "DISAGREE"
            payload.update(enumerated=count, verdict=verdict)
            if args.json:
                _emit_json(payload)
            else:
                print(f"{mode} states m={m}: recurrence {recurrence}, "
                      f"enumerated {count} {verdict}")
            return EXIT_OK if verdict == "AGREE" else EXIT_CHECK_FAILED
        payload.update(enumerated=None, verdict="SKIPPED")
        if args.json:
            _emit_json(payload)
        else:
            print(f"{mode} states m={m}: recurrence {recurrence} "
                  f"(enumeration skipped above m={FINE_ENUM_CAP})")
        return EXIT_OK
    # reachable
    if m > REACHABLE_CAP:
        payload.update(total=None, verdict="SKIPPED")
        if args.json:
            _emit_json(payload)
        else:
            print(f"reachable states m={m}: search skipped above m={REACHABLE_CAP}")
        return EXIT_OK
    policy = "random" if args.policy == "random" else MIN_SMALL_CHANGE
    report = reachable_states(m, policy)
    payload.update(
        policy=policy,
        total=report.total,
        arrival_reachable=len(report.arrival_reachable),
        departure_only=len(report.departure_only),
    )
    if args.json:
        _emit_json(payload)
    else:
        print(f"reachable states m={m} policy={policy}: total {report.total}, "
              f"arrival-reachable {len(report.arrival_reachable)}, "
              f"departure-only {len(report.departure_only)}")
    return EXIT_OK


# -- wave --------------------------------------------------------------------


def cmd_wave(args: argparse.Namespace) -> int:
    n, m, d = args.N, args.M, args.d
    if n < 1 or m < 1 or m % n:
        return _fail(f"N={n} must divide M={m}")
    if not 0 <= d < m // n:
        return _fail(f"d={d} out of range 0..{m // n - 1}")
    if args.blocks < 1:
        return _fail("--blocks must be >= 1")
    seed = args.seed if args.seed is not None else Random().randrange(2**32)
    gen = np.random.default_rng(seed)

    checks: dict[str, dict] = {}
    if args.check in ("equiv", "both"):
        worst = 0.0
        for _ in range(args.blocks):
            if args.psk:
                symbols = np.exp(2j * np.pi * gen.random(n))
            else:
                symbols = gen.standard_normal(n) + 1j * gen.standard_normal(n)
            spec = StreamSpec(symbols, m, d)
            err = float(np.max(np.abs(stream_time(spec) - stream_freq_oracle(spec))))
            worst = max(worst, err)
        checks["equiv"] = {"max_error": worst, "threshold": EQUIV_TOL,
                           "pass": worst < EQUIV_TOL}
    if args.check in ("envelope", "both"):
        target = n / m
        worst = 0.0
        for _ in range(args.blocks):
            symbols = np.exp(2j * np.pi * gen.random(n))
            spec = StreamSpec(symbols, m, d)
            mags = np.abs(stream_time(spec))
            worst = max(worst, float(np.max(np.abs(mags - target))))
        checks["envelope"] = {"max_error": worst, "threshold": ENVELOPE_TOL,
                              "pass": worst < ENVELOPE_TOL}

    ok = all(c["pass"] for c in checks.values())
    if args.json:
        _emit_json({"N": n, "M": m, "d": d, "seed": seed, "blocks": args.blocks,
                    "checks": checks, "pass": ok})
    else:
        print(f"seed: {seed}")
        for name, c in checks.items():
            word = "PASS" if c["pass"] else "FAIL"
            print(f"{name} max error = {c['max_error']:.3e}  {word} "
                  f"(< {c['threshold']:g})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# -- parser ------------------------------------------------------------------


def _add_scheme_flags(sub: argparse.ArgumentParser) -> None:
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--m", type=int, help="power-of-two band: 2**m bins")
    group.add_argument("--radices", help="composite band, e.g. 2,2,3 (last digit fastest)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ifdma",
        description="Evenly-spaced subcarrier allocation: mapping tables, "
                    "batch placement, blocking simulation, state counts, "
                    "waveform checks.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("map", help="print the bin-to-subcarrier permutation")
    _add_scheme_flags(p)
    p.add_argument("--index", type=int, help="show a single bin row")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_map)

    p = subs.add_parser("alloc", help="place a batch of named requests")
    _add_scheme_flags(p)
    p.add_argument("--requests", required=True,
                   help="inline name:size list (A:1,B:4) or @file.json")
    p.add_argument("--policy", choices=sorted(_POLICY_FLAGS))
    p.add_argument("--dc", type=int, metavar="SUBCARRIER",
                   help="pre-block the bin that maps to this subcarrier")
    p.add_argument("--multistream", action="store_true",
                   help="serve arbitrary sizes by gathering several blocks")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_alloc)

    p = subs.add_parser("sim", help="run a blocking-probability sweep")
    p.add_argument("--config", required=True, help="JSON config document")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sim)

    p = subs.add_parser("states", help="count Markov states")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--mode", choices=("fine", "super", "reachable"), default="fine")
    p.add_argument("--policy", choices=("min-small-change", "random"),
                   default="min-small-change",
                   help="admission policy for --mode reachable")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_states)

    p = subs.add_parser("wave", help="cross-check waveform synthesis")
    p.add_argument("--N", type=int, required=True, help="symbols per block")
    p.add_argument("--M", type=int, required=True, help="band size")
    p.add_argument("--d", type=int, default=0, help="subcarrier offset")
    p.add_argument("--check", choices=("equiv", "envelope", "both"), default="both")
    p.add_argument("--psk", action="store_true",
                   help="use unit-modulus symbols for the equivalence check too")
    p.add_argument("--blocks", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_wave)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
