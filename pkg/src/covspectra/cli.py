"""Command-line client for the covspectra service.

The CLI is a thin HTTP client: every command serializes its request
through the service's JSON schemas.  By default the app is mounted
in-process (no server needed); ``--url`` targets a running instance
instead, and ``serve`` starts one.  Logging goes to stderr, data to
stdout or files.

Exit codes: 0 pass/success, 1 verification failed, 2 configuration or
numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import httpx
import numpy as np

log = logging.getLogger("covspectra")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


class ServiceClient:
    """HTTP client bound either to a remote URL or the in-process app."""

    def __init__(self, url: str | None = None):
        self._remote = None
        self._app = None
        if url:
            self._remote = httpx.Client(base_url=url, timeout=None)
        else:
            from .service import create_app

            self._app = create_app()

    def _post_local(self, path: str, payload: dict) -> httpx.Response:
        import asyncio

        async def go():
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://covspectra.local", timeout=None
            ) as client:
                return await client.post(path, json=payload)

        return asyncio.run(go())

    def post(self, path: str, payload: dict) -> dict:
        if self._remote is not None:
            resp = self._remote.post(path, json=payload)
        else:
            resp = self._post_local(path, payload)
        if resp.status_code != 200:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise CommandError(f"{path} -> HTTP {resp.status_code}: {detail}")
        return resp.json()

    def close(self):
        if self._remote is not None:
            self._remote.close()


class CommandError(Exception):
    pass


def parse_measure(text: str) -> list[tuple[float, float]]:
    """Parse 't:w,t:w,...' (or bare 't' for a point mass) into atom pairs."""
    atoms = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            t, w = part.split(":", 1)
            atoms.append((float(t), float(w)))
        else:
            atoms.append((float(part), 1.0))
    if not atoms:
        raise CommandError(f"empty measure spec {text!r}")
    return atoms


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CommandError(f"cannot read {path}: {exc}") from exc


def _write_records_csv(path: Path, records: list[dict]):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["experiment", "trial", "seed", "p", "n", "statistic_name", "value"])
        for r in records:
            writer.writerow(
                [r["experiment"], r["trial"], r["seed"], r["p"], r["n"], r["statistic_name"],
                 repr(float(r["value"]))]
            )


def cmd_solve(client: ServiceClient, args) -> int:
    payload = {
        "z": [args.z[0], args.z[1]],
        "c": args.c,
        "measure": {"atoms": parse_measure(args.measure)},
        "tol": args.tol,
        "max_iters": args.max_iters,
        "damping": args.damping,
    }
    out = client.post("/solve", payload)
    m, mc = out["m"], out["m_companion"]
    print(f"m           = {m[0]!r} {'+' if m[1] >= 0 else '-'} {abs(m[1])!r}i")
    print(f"m_companion = {mc[0]!r} {'+' if mc[1] >= 0 else '-'} {abs(mc[1])!r}i")
    print(f"residual    = {out['residual']:.3e}")
    return EXIT_OK


def cmd_support(client: ServiceClient, args) -> int:
    out = client.post(
        "/support", {"c": args.c, "measure": {"atoms": parse_measure(args.measure)}}
    )
    for a, b in out["intervals"]:
        print(f"{a!r} {b!r}")
    print(f"# zero_atom_weight {out['zero_atom_weight']!r}")
    return EXIT_OK


def cmd_density(client: ServiceClient, args) -> int:
    out = client.post(
        "/density-profile",
        {
            "c": args.c,
            "measure": {"atoms": parse_measure(args.measure)},
            "grid_points": args.grid_points,
            "pad": args.pad,
        },
    )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    density_path = outdir / "density.txt"
    with density_path.open("w") as fh:
        for x, y in zip(out["x"], out["density"]):
            fh.write(f"{x!r} {y!r}\n")
    support_path = outdir / "support.txt"
    with support_path.open("w") as fh:
        for a, b in out["support"]["intervals"]:
            fh.write(f"{a!r} {b!r}\n")
    log.info("wrote %s and %s", density_path, support_path)
    return EXIT_OK


def cmd_simulate(client: ServiceClient, args) -> int:
    payload = _read_json(args.config)
    if args.seed is not None:
        payload["seed"] = args.seed
    out = client.post("/simulate", payload)
    vals = np.array(out["eigenvalues"])
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    spec_path = outdir / "spectrum.txt"
    spec_path.write_text("".join(f"{v!r}\n" for v in vals))
    hist, edges = np.histogram(vals, bins=args.bins, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    hist_path = outdir / "histogram.txt"
    with hist_path.open("w") as fh:
        for x, y in zip(centers, hist):
            fh.write(f"{x!r} {y!r}\n")
    log.info("wrote %s (%d eigenvalues) and %s", spec_path, len(vals), hist_path)
    return EXIT_OK


def cmd_verify(client: ServiceClient, args, kind: str) -> int:
    payload = _read_json(args.config)
    if payload.get("kind") != kind:
        raise CommandError(f"config kind {payload.get('kind')!r} does not match verify-{kind}")
    if args.seed is not None:
        payload["seed"] = args.seed
    request = {"config": payload}
    if args.workers is not None:
        request["workers"] = args.workers
    log.info("running %s campaign (%s trials, sizes %s)", kind, payload.get("trials"),
             payload.get("sizes"))
    out = client.post("/experiments/run", request)
    outdir = Path(args.out or payload.get("output_dir") or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    _write_records_csv(outdir / f"{kind}_records.csv", out["records"])
    (outdir / f"{kind}_summary.json").write_text(
        json.dumps({"summary": out["summary"], "predicted": out["predicted"]}, indent=2) + "\n"
    )
    log.info("summary: %s", json.dumps(out["summary"]))
    return EXIT_OK if out["passed"] else EXIT_FAIL


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("covspectra.service:app", host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covspectra",
        description="Limiting spectra of sample covariance matrices: solver, support, "
        "simulation, and verification campaigns.",
    )
    parser.add_argument("--url", default=None, help="remote service URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_measure_args(p):
        p.add_argument("--c", type=float, required=True, help="aspect ratio p/n")
        p.add_argument("--measure", required=True, help="population atoms 't:w,t:w' ('1' = point mass)")

    p = sub.add_parser("solve", help="print m and the companion transform at one point")
    add_measure_args(p)
    p.add_argument("--z", type=_complex_pair, required=True, help="evaluation point 'u,v' with v>0")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--damping", type=float, default=0.5)

    p = sub.add_parser("support", help="print support intervals")
    add_measure_args(p)

    p = sub.add_parser("density", help="emit a plot-ready density profile")
    add_measure_args(p)
    p.add_argument("--grid-points", type=int, default=512)
    p.add_argument("--pad", type=float, default=0.1)
    p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("simulate", help="sample one ensemble and dump its spectrum")
    p.add_argument("--config", required=True, help="JSON file with filter/p/n/entry/seed")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--bins", type=int, default=50, help="histogram bins")

    for kind in ("lsd", "gap", "edge", "qf"):
        p = sub.add_parser(f"verify-{kind}", help=f"run the {kind} verification campaign")
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None, help="output directory (default: config output_dir)")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _complex_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected 'real,imag'")
    return float(parts[0]), float(parts[1])


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    logging.getLogger("httpx").setLevel(logging.WARNING)
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "serve":
        return cmd_serve(args)

    client = ServiceClient(args.url)
    try:
        if args.command == "solve":
            return cmd_solve(client, args)
        if args.command == "support":
            return cmd_support(client, args)
        if args.command == "density":
            return cmd_density(client, args)
        if args.command == "simulate":
            return cmd_simulate(client, args)
        if args.command.startswith("verify-"):
            return cmd_verify(client, args, args.command.removeprefix("verify-"))
        parser.error(f"unknown command {args.command}")
    except (CommandError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR
    except httpx.HTTPError as exc:
        log.error("transport failure: %s", exc)
        return EXIT_ERROR
    finally:
        client.close()
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
