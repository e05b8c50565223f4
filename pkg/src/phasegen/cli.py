"""Command-line front end.

A thin client of the HTTP API: every command issues requests against the
service, either in process through the app's ASGI interface (default) or
against a running server given with --url.

Exit codes: 0 ok, 1 failed check or server fault, 2 config error, 3 IO error.
"""

from __future__ import annotations

import argparse
import base64
import json
import math
import os
import sys
import time
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3

BATCH_FILE_PATTERN = "batch-{index:05d}.pgd1"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def open_client(url: str | None) -> httpx.Client:
    if url:
        return httpx.Client(base_url=url.rstrip("/"), timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        # starlette wants httpx2 for its sync ASGI client; httpx works fine
        warnings.filterwarnings("ignore", message="Using `httpx` with `starlette.testclient`")
        from starlette.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def check_response(resp: httpx.Response) -> None:
    if resp.status_code < 400:
        return
    try:
        detail = resp.json().get("detail", resp.text)
    except ValueError:
        detail = resp.text
    code = EXIT_CONFIG if resp.status_code < 500 else EXIT_FAILED
    raise CliError(f"service error {resp.status_code}: {detail}", code)


def resolve_seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("PHASEGEN_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise CliError(f"PHASEGEN_SEED is not an integer: {env!r}", EXIT_CONFIG) from None


def load_geometry_payload(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read geometry file: {exc}", EXIT_IO) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"geometry file is not valid JSON: {exc}", EXIT_CONFIG) from exc
    if not isinstance(payload, dict):
        raise CliError("geometry file must hold a JSON object", EXIT_CONFIG)
    return payload


def _json_bound(value: float) -> float | str:
    # strict JSON has no Infinity; the service coerces "inf"/"-inf" back
    return value if math.isfinite(value) else str(value)


def distributions_payload(args: argparse.Namespace) -> dict:
    return {
        "classes": list(args.classes),
        "r": [_json_bound(v) for v in args.r],
        "snr_db": [_json_bound(v) for v in args.snr],
        "drr_db": [_json_bound(v) for v in args.drr],
    }


def cmd_generate(args: argparse.Namespace) -> int:
    if args.batches < 1:
        raise CliError("--batches must be >= 1", EXIT_CONFIG)
    seed = resolve_seed(args)
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory: {exc}", EXIT_IO) from exc

    base = {
        "seed": seed,
        "batch_size": args.batch_size,
        "frames_per_scenario": args.frames_per_scenario,
        "workers": args.workers,
        "geometry": load_geometry_payload(args.geometry),
        "distributions": distributions_payload(args),
    }
    total_bytes = 0
    t0 = time.perf_counter()
    with open_client(args.url) as client:
        for index in range(args.batches):
            resp = client.post("/batches", json={**base, "batch_index": index})
            check_response(resp)
            path = out_dir / BATCH_FILE_PATTERN.format(index=index)
            try:
                path.write_bytes(resp.content)
            except OSError as exc:
                raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from exc
            total_bytes += len(resp.content)
    seconds = time.perf_counter() - t0
    n_samples = args.batches * args.batch_size
    report = {
        "batches": args.batches,
        "samples": n_samples,
        "bytes": total_bytes,
        "seconds": round(seconds, 3),
        "samples_per_sec": round(n_samples / seconds, 1),
        "out_dir": str(out_dir),
    }
    if args.json:
        print(json.dumps(report, sort_keys=True))
    else:
        print(
            f"wrote {args.batches} batches ({n_samples} samples, {total_bytes} bytes) "
            f"to {out_dir} in {seconds:.2f} s -- {report['samples_per_sec']} samples/s"
        )
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    payload = {
        "seed": resolve_seed(args),
        "n_draws": args.n_draws,
        "geometry": load_geometry_payload(args.geometry),
        "distributions": distributions_payload(args),
    }
    with open_client(args.url) as client:
        resp = client.post("/validate", json=payload)
        check_response(resp)
    report = resp.json()
    if args.json:
        for check in report["checks"]:
            print(json.dumps(check, sort_keys=True))
        print(
            json.dumps(
                {"passed": report["passed"], "n_draws": report["n_draws"], "seed": report["seed"]},
                sort_keys=True,
            )
        )
    else:
        for check in report["checks"]:
            status = "PASS" if check["pass"] else "FAIL"
            print(
                f"[{status}] {check['check']}: estimate {check['estimate']:+.6f} "
                f"vs target {check['target']:+.6f} (tol {check['tolerance']:.6f})"
            )
        overall = "PASS" if report["passed"] else "FAIL"
        print(f"[{overall}] {len(report['checks'])} checks, n_draws={report['n_draws']}")
    return EXIT_OK if report["passed"] else EXIT_FAILED


def cmd_estimate(args: argparse.Namespace) -> int:
    chunks = []
    for path in args.dataset:
        try:
            chunks.append(Path(path).read_bytes())
        except OSError as exc:
            raise CliError(f"cannot read dataset {path}: {exc}", EXIT_IO) from exc
    payload = {
        "dataset_b64": base64.b64encode(b"".join(chunks)).decode("ascii"),
        "r_ref": args.r_ref,
        "block_size": args.block,
        "include_records": args.records is not None,
        "classes": list(args.classes),
        "geometry": load_geometry_payload(args.geometry),
    }
    with open_client(args.url) as client:
        resp = client.post("/estimate", json=payload)
        check_response(resp)
    report = resp.json()
    if args.records is not None:
        try:
            with open(args.records, "w", encoding="utf-8") as fh:
                for record in report.get("records") or []:
                    fh.write(json.dumps(record, sort_keys=True) + "\n")
        except OSError as exc:
            raise CliError(f"cannot write records: {exc}", EXIT_IO) from exc
    metrics = {
        k: report[k] for k in ("mae", "pacc", "mae50", "pacc50", "n_frames", "n_blocks")
    }
    print(json.dumps(metrics, sort_keys=True))
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    if args.batches < 1:
        raise CliError("--batches must be >= 1", EXIT_CONFIG)
    payload = {
        "batches": args.batches,
        "batch_size": args.batch_size,
        "frames_per_scenario": args.frames_per_scenario,
        "workers": args.workers,
        "seed": resolve_seed(args),
        "geometry": load_geometry_payload(args.geometry),
        "distributions": distributions_payload(args),
    }
    with open_client(args.url) as client:
        resp = client.post("/bench", json=payload)
        check_response(resp)
    report = resp.json()
    if args.json:
        print(json.dumps(report, sort_keys=True))
    else:
        print(
            f"factorization: {report['factorize_ms']:.2f} ms (one-time)\n"
            f"{report['batches']} batches of {report['batch_size']} with "
            f"{report['workers']} workers: {report['per_batch_ms']:.1f} ms/batch, "
            f"{report['per_sample_us']:.1f} us/sample, "
            f"{report['samples_per_sec']:.0f} samples/s"
        )
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="phasegen",
        description="Generate, validate and certify phase-map DOA training data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed", type=int, default=None, help="master seed (default: $PHASEGEN_SEED, else 0)"
    )
    common.add_argument(
        "--geometry", metavar="FILE", default=None,
        help="geometry JSON file (default: 4-mic linear array, 0.08 m spacing)",
    )
    common.add_argument(
        "--url", default=None, help="base URL of a running service (default: run in process)"
    )
    common.add_argument("--json", action="store_true", help="report as line-delimited JSON")

    scenario = argparse.ArgumentParser(add_help=False)
    scenario.add_argument(
        "--classes", nargs=3, type=float, metavar=("START", "STEP", "STOP"),
        default=[0.0, 5.0, 180.0], help="class angle grid in degrees",
    )
    scenario.add_argument(
        "--r", nargs=2, type=float, metavar=("LO", "HI"), default=[1.0, 3.0],
        help="source distance range in meters",
    )
    scenario.add_argument(
        "--snr", nargs=2, type=float, metavar=("LO", "HI"), default=[0.0, 30.0],
        help="SNR range in dB",
    )
    scenario.add_argument(
        "--drr", nargs=2, type=float, metavar=("LO", "HI"), default=[-9.0, 0.0],
        help="DRR range in dB",
    )

    p = sub.add_parser(
        "generate", parents=[common, scenario], formatter_class=fmt,
        help="generate PGD1 dataset files",
    )
    p.add_argument("--batches", type=int, default=1, help="number of batch files to write")
    p.add_argument("--batch-size", type=int, default=512, help="samples per batch")
    p.add_argument(
        "--frames-per-scenario", type=int, default=1,
        help="consecutive frames sharing one parameter draw",
    )
    p.add_argument("--workers", type=int, default=None, help="threads (default: logical cores)")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser(
        "validate", parents=[common, scenario], formatter_class=fmt,
        help="run the statistical validation suite",
    )
    p.add_argument("--n-draws", type=int, default=100_000, help="Monte Carlo draws per check")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser(
        "estimate", parents=[common], formatter_class=fmt,
        help="run the DOA oracle over a dataset and report MAE/PACC",
    )
    p.add_argument("dataset", nargs="+", help="PGD1 files (concatenated containers allowed)")
    p.add_argument(
        "--classes", nargs=3, type=float, metavar=("START", "STEP", "STOP"),
        default=[0.0, 5.0, 180.0], help="steering class grid in degrees",
    )
    p.add_argument("--r-ref", type=float, default=2.0, help="steering distance in meters")
    p.add_argument("--block", type=int, default=50, help="frames per block decision")
    p.add_argument(
        "--records", metavar="FILE", default=None,
        help="also write per-frame decision records as ndjson",
    )
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser(
        "bench", parents=[common, scenario], formatter_class=fmt,
        help="measure generation throughput (excludes IO)",
    )
    p.add_argument("--batches", type=int, default=4, help="batches to time")
    p.add_argument("--batch-size", type=int, default=512, help="samples per batch")
    p.add_argument(
        "--frames-per-scenario", type=int, default=1,
        help="consecutive frames sharing one parameter draw",
    )
    p.add_argument("--workers", type=int, default=None, help="threads (default: logical cores)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", formatter_class=fmt, help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1", help="bind address")
    p.add_argument("--port", type=int, default=8000, help="port")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except httpx.TransportError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
