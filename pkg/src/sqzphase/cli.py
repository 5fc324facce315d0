"""Thin command-line client of the sqzphase service.

Each subcommand assembles a request, posts it to the service (an in-process
instance by default, or a remote one via --server), and writes the returned
artifact files into --out atomically. All computation happens behind the
HTTP API; this module only parses flags, moves bytes and sets exit codes:
0 success, 2 usage error, 3 numerical failure.

Option precedence is flags > config file > built-in defaults. The config
file is flat ``key = value`` text with ``#`` comments; keys match the long
option names.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import math
import os
import sys
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_TRANSPORT = 1


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


# ------------------------------------------------------------ converters


def _grid(text: str) -> dict:
    """Parse a grid flag: 'a,b,c' explicit values, or 'start:stop:num[:log|linear]'."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise ValueError(f"bad grid '{text}', expected start:stop:num[:log|linear]")
        return {
            "start": float(parts[0]),
            "stop": float(parts[1]),
            "num": int(parts[2]),
            "spacing": parts[3] if len(parts) == 4 else "log",
        }
    return {"values": [float(v) for v in text.split(",") if v.strip()]}


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"bad boolean '{text}'")


# Per-command option tables: dest -> (converter, default, help).
_COMMON = {
    "seed": (int, 1, "PRNG seed (u64)"),
    "out": (str, "out", "output directory for artifacts"),
    "config": (str, None, "flat key = value config file"),
    "server": (str, None, "base URL of a running service; default runs in-process"),
}

_OPTIONS: dict[str, dict] = {
    "limits": {
        "photons": (_grid, {"start": 0.1, "stop": 50.0, "num": 60, "spacing": "log"},
                    "photon grid: 'a,b,c' or start:stop:num[:log|linear]"),
        "eta": (float, 0.89, "transmission for the lossy columns"),
    },
    "sweep-phase": {
        "photons": (float, 1.8, "target detected photon number"),
        "r": (float, None, "squeezing parameter (overrides --photons)"),
        "eta": (float, 1.0, "channel transmission"),
        "xi": (float, 0.0, "excess noise, vacuum units"),
        "m": (int, 1000, "quadrature samples per estimate"),
        "trials": (int, 200, "Monte Carlo trials per phase"),
        "phases": (_grid, None, "true-phase grid (default 25 points across (0, pi/2))"),
        "grid-k": (int, 10000, "posterior grid points"),
    },
    "sweep-photons": {
        "photons": (_grid, None, "photon grid (default 0.5:20:12:log)"),
        "eta": (float, 0.89, "channel transmission"),
        "m": (int, 1000, "quadrature samples per estimate"),
        "trials": (int, 200, "Monte Carlo trials per photon number"),
        "grid-k": (int, 10000, "posterior grid points"),
    },
    "estimate": {
        "photons": (float, None, "target detected photon number"),
        "r": (float, 1.0, "squeezing parameter"),
        "eta": (float, 1.0, "channel transmission"),
        "xi": (float, 0.0, "excess noise, vacuum units"),
        "phi-true": (float, None, "true phase (default: the optimal phase)"),
        "m": (int, 1000, "batch size"),
        "grid-lo": (float, 0.0, "posterior support lower edge"),
        "grid-hi": (float, math.pi / 2.0, "posterior support upper edge"),
        "grid-k": (int, 10000, "posterior grid points"),
        "snapshots": (_int_list, [], "comma list of intermediate sample counts"),
        "export-batch": (_bool, False, "also write batch.csv + batch_meta.json"),
        "batch-csv": (str, None, "import an index,x batch instead of simulating"),
        "batch-meta": (str, None, "JSON sidecar of the imported batch"),
    },
    "track": {
        "photons": (float, 6.0, "target detected photon number"),
        "eta": (float, 0.89, "channel transmission"),
        "fs": (float, 1.0e6, "raw quadrature sample rate, S/s"),
        "window": (int, 100, "samples per estimate window"),
        "duration": (float, 0.5, "record length, seconds"),
        "tone-freq": (float, 3000.0, "injected tone frequency, Hz"),
        "tone-amp": (float, 0.01, "injected tone amplitude, rad"),
        "band-lo": (float, 2000.0, "bandpass low edge, Hz"),
        "band-hi": (float, 4000.0, "bandpass high edge, Hz"),
        "noise-rms": (float, 0.0, "low-frequency noise rms, rad"),
        "noise-corner": (float, 200.0, "low-frequency noise corner, Hz"),
    },
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqzphase",
        description="Squeezed-vacuum phase estimation experiments (service client).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, options in _OPTIONS.items():
        p = sub.add_parser(command, help=f"run the {command} experiment")
        for dest, (_conv, _default, help_text) in {**options, **_COMMON}.items():
            p.add_argument(f"--{dest}", type=str, default=None, help=help_text)
    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", type=str, default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        values[key.strip().replace("_", "-")] = value.strip()
    return values


def _resolve_options(command: str, args: argparse.Namespace) -> dict:
    """Apply precedence flags > config file > defaults, with conversion."""
    table = {**_OPTIONS[command], **_COMMON}
    flags = {dest: getattr(args, dest.replace("-", "_")) for dest in table}
    config_path = flags.get("config")
    file_values = _load_config_file(config_path) if config_path else {}
    unknown = set(file_values) - set(table)
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")

    resolved = {}
    for dest, (conv, default, _help) in table.items():
        raw = flags.get(dest)
        if raw is None:
            raw = file_values.get(dest)
        if raw is None:
            resolved[dest] = default
            continue
        try:
            resolved[dest] = conv(raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for --{dest}: {exc}") from exc
    return resolved


# ------------------------------------------------------------ transport


async def _post_async(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        async with httpx.AsyncClient(base_url=server, timeout=None) as client:
            return await client.post(path, json=payload)
    from .service import create_app

    transport = httpx.ASGITransport(app=create_app())
    async with httpx.AsyncClient(
        transport=transport, base_url="http://sqzphase.internal", timeout=None
    ) as client:
        return await client.post(path, json=payload)


def _post(server: str | None, path: str, payload: dict) -> dict:
    try:
        response = asyncio.run(_post_async(server, path, payload))
    except httpx.HTTPError as exc:
        raise ConnectionError(f"service request failed: {exc}") from exc
    if response.status_code in (400, 422):
        raise UsageError(f"request rejected: {response.json().get('detail')}")
    if response.status_code >= 500:
        detail = {}
        try:
            detail = response.json().get("detail", {})
        except ValueError:
            pass
        if isinstance(detail, dict) and detail.get("code") == "numerical":
            raise NumericalFailure(detail.get("message", "numerical failure"))
        raise ConnectionError(f"service error {response.status_code}: {detail}")
    return response.json()


def _write_artifacts(out_dir: str, artifacts: dict[str, str]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(artifacts.items()):
        target = out / name
        tmp = out / f".{name}.tmp"
        tmp.write_text(text)
        os.replace(tmp, target)
        print(f"wrote {target}")


# ------------------------------------------------------------- commands


def _payload_limits(opt: dict) -> tuple[str, dict]:
    return "/experiments/limits", {
        "photons": opt["photons"],
        "eta": opt["eta"],
        "seed": opt["seed"],
    }


def _payload_sweep_phase(opt: dict) -> tuple[str, dict]:
    photons = None if opt["r"] is not None else opt["photons"]
    return "/experiments/sweep-phase", {
        "photons": photons,
        "r": opt["r"],
        "eta": opt["eta"],
        "xi": opt["xi"],
        "m": opt["m"],
        "trials": opt["trials"],
        "phases": opt["phases"],
        "seed": opt["seed"],
        "grid_k": opt["grid-k"],
    }


def _payload_sweep_photons(opt: dict) -> tuple[str, dict]:
    return "/experiments/sweep-photons", {
        "photons": opt["photons"],
        "eta": opt["eta"],
        "m": opt["m"],
        "trials": opt["trials"],
        "seed": opt["seed"],
        "grid_k": opt["grid-k"],
    }


def _read_batch_files(csv_path: str, meta_path: str) -> dict:
    try:
        meta = json.loads(Path(meta_path).read_text())
        rows = Path(csv_path).read_text().strip().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read batch files: {exc}") from exc
    if not rows or rows[0].strip() != "index,x":
        raise UsageError(f"{csv_path}: expected an 'index,x' header")
    try:
        samples = [float(row.split(",")[1]) for row in rows[1:]]
        return {
            "batch_samples": samples,
            "batch_phi_true": float(meta["phi_true"]),
            "batch_v_minus": float(meta["v_minus"]),
            "batch_v_plus": float(meta["v_plus"]),
            "batch_seed": int(meta.get("seed", 0)),
        }
    except (KeyError, ValueError, IndexError) as exc:
        raise UsageError(f"malformed batch files: {exc}") from exc


def _payload_estimate(opt: dict) -> tuple[str, dict]:
    payload: dict = {
        "phi_true": opt["phi-true"],
        "m": opt["m"],
        "seed": opt["seed"],
        "grid": {"lo": opt["grid-lo"], "hi": opt["grid-hi"], "k": opt["grid-k"]},
        "snapshots": opt["snapshots"],
        "export_batch": opt["export-batch"],
    }
    if opt["batch-csv"] is not None or opt["batch-meta"] is not None:
        if opt["batch-csv"] is None or opt["batch-meta"] is None:
            raise UsageError("--batch-csv and --batch-meta must be given together")
        payload.update(_read_batch_files(opt["batch-csv"], opt["batch-meta"]))
    else:
        photons = None if opt["photons"] is None else opt["photons"]
        r = opt["r"] if photons is None else None
        payload["probe"] = {"r": r, "photons": photons, "eta": opt["eta"], "xi": opt["xi"]}
    return "/experiments/estimate", payload


def _payload_track(opt: dict) -> tuple[str, dict]:
    return "/experiments/track", {
        "photons": opt["photons"],
        "eta": opt["eta"],
        "fs": opt["fs"],
        "window_m": opt["window"],
        "duration": opt["duration"],
        "tone_freq": opt["tone-freq"],
        "tone_amp": opt["tone-amp"],
        "band_lo": opt["band-lo"],
        "band_hi": opt["band-hi"],
        "noise_rms": opt["noise-rms"],
        "noise_corner": opt["noise-corner"],
        "seed": opt["seed"],
    }


_PAYLOADS = {
    "limits": _payload_limits,
    "sweep-phase": _payload_sweep_phase,
    "sweep-photons": _payload_sweep_photons,
    "estimate": _payload_estimate,
    "track": _payload_track,
}


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK

    try:
        opt = _resolve_options(args.command, args)
        path, payload = _PAYLOADS[args.command](opt)
        print(f"config: {json.dumps({k: v for k, v in opt.items() if k != 'server'}, sort_keys=True, default=str)}")
        result = _post(opt["server"], path, payload)
        _write_artifacts(opt["out"], result["artifacts"])
        summary = result.get("summary", {})
        print(f"summary: {json.dumps(summary, sort_keys=True, default=str)}")
        return EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ConnectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
