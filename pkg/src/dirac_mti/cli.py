"""``dirac-mti`` command line.

Every subcommand builds the same request body the HTTP service accepts.  By
default the request is handled in-process; with ``--server URL`` it is posted
to a running ``dirac_mti.service.api`` instance instead.

Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 reference gate.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .harness.config import load_config
from .service.schemas import (
    EXIT_CONFIG,
    EXIT_GATE,
    EXIT_NAN,
    LimitStudyResponse,
    MakeRefResponse,
    SweepRequest,
    SweepResponse,
    ValidateResponse,
)


def _remote(server: str, method: str, path: str, model, body=None, params=None):
    import httpx

    try:
        r = httpx.request(method, server.rstrip("/") + path, json=body, params=params, timeout=None)
    except httpx.HTTPError as exc:
        raise ConfigError(f"cannot reach {server}: {exc}") from None
    if r.status_code in (400, 422):
        raise ConfigError(r.json().get("detail", r.text))
    r.raise_for_status()
    return model.model_validate(r.json())


def _out_dir(args, config) -> Path:
    return Path(args.out or config.out_dir or "results")


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    req = SweepRequest(config=config, threads=args.threads)
    if args.server:
        resp = _remote(args.server, "POST", "/sweep", SweepResponse, body=req.model_dump(mode="json"))
    else:
        from .service import handlers

        resp = handlers.sweep(req)
    out = _out_dir(args, config)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(resp.csv)
    (out / "report.json").write_text(json.dumps(resp.model_dump(exclude={"csv"}), indent=1))
    sys.stdout.write(resp.csv)
    for c in resp.cells:
        if c.status != "ok":
            print(f"eps={c.epsilon:g} h={c.h:g} tau={c.tau:g}: {c.status} {c.detail}", file=sys.stderr)
    if resp.exit_code == EXIT_GATE:
        print("reference-validity gate tripped: refine the reference (smaller tau_e)", file=sys.stderr)
    return resp.exit_code


def cmd_limit_study(args) -> int:
    config = load_config(args.config)
    if args.server:
        resp = _remote(
            args.server, "POST", "/limit-study", LimitStudyResponse,
            body=config.model_dump(mode="json"), params={"threads": args.threads} if args.threads else None,
        )
    else:
        from .service import handlers

        resp = handlers.limit_study(config, args.threads)
    if resp.exit_code == EXIT_NAN:
        print(f"numerical failure: {resp.message}", file=sys.stderr)
        return resp.exit_code
    out = _out_dir(args, config)
    out.mkdir(parents=True, exist_ok=True)
    (out / "limit_study.csv").write_text(resp.csv)
    if config.plot_data:
        for s in resp.series:
            rows = "\n".join(f"{t:.10e} {a:.10e} {b:.10e}" for t, a, b in zip(s.t, s.E_sch, s.E_pau))
            (out / f"limit_eps{s.epsilon:.6g}.dat").write_text("# t E_sch E_pau\n" + rows + "\n")
    sys.stdout.write(resp.csv)
    if not resp.boundary_ok:
        print(f"warning: {resp.message}", file=sys.stderr)
    return resp.exit_code


def cmd_make_ref(args) -> int:
    config = load_config(args.config)
    if args.server:
        resp = _remote(args.server, "POST", "/make-ref", MakeRefResponse, body=config.model_dump(mode="json"))
    else:
        from .service import handlers

        resp = handlers.make_ref(config)
    for s in resp.snapshots:
        drift = s.meta.get("mass_drift", float("nan"))
        sc = s.meta.get("self_convergence")
        extra = "" if sc is None else f" self-convergence {sc:.2e}"
        print(f"{s.path}  mass drift {drift:.2e}{extra}")
    return resp.exit_code


def cmd_validate(args) -> int:
    if args.server:
        resp = _remote(args.server, "GET", "/validate", ValidateResponse)
    else:
        from .service import handlers

        resp = handlers.validate()
    for c in resp.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.3e} (tol {c.tol:.0e})")
    return resp.exit_code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dirac-mti", description=__doc__.split("\n\n")[0])
    p.add_argument("--server", default=os.environ.get("DIRAC_MTI_SERVER"), help="post requests to this service URL")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="error/order table over (eps, h, tau)")
    s.add_argument("--config", required=True)
    s.add_argument("--threads", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("limit-study", help="E_sch(t), E_pau(t) time series")
    s.add_argument("--config", required=True)
    s.add_argument("--threads", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_limit_study)

    s = sub.add_parser("make-ref", help="build and cache TSFP reference solutions")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_make_ref)

    s = sub.add_parser("validate", help="run the quick invariant suite")
    s.set_defaults(func=cmd_validate)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; 2 is reserved for numerical failure here
        return EXIT_CONFIG if exc.code else 0
    if getattr(args, "threads", None) is not None and args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
