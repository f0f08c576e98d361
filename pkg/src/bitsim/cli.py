"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 oracle
mismatch (a serial engine produced output differing from the brute-force
convolution — an engine bug, never a user error).
"""

from __future__ import annotations

import sys

import click

from .config import ConfigError, load_config
from .runner import OracleMismatch, analyze, analyze_csv_lines, simulate
from .traces import DTYPE_I16, DTYPE_U8, TraceIOError, write_trace
from .runner import build_layer_inputs

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_MISMATCH = 3


def _load(config_path, seed):
    cfg = load_config(config_path)
    if seed is not None:
        cfg.seed = seed
    return cfg


def _write_lines(path, lines):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as e:
        raise TraceIOError(f"cannot write {path}: {e}") from e


@click.group()
def main():
    """Cycle and term models of serial convolution accelerator datapaths."""


@main.command("simulate")
@click.argument("config", type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", type=click.Path(), default=None,
              help="CSV path (overrides output.csv from the config).")
def simulate_cmd(config, seed, out):
    """Run every layer x engine variant and write the cycle report."""
    try:
        cfg = _load(config, seed)
        doc = simulate(cfg)
        csv_path = out or cfg.csv_path
        if csv_path:
            _write_lines(csv_path, doc.csv_lines())
        click.echo(doc.table())
    except ConfigError as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    except TraceIOError as e:
        click.echo(f"i/o error: {e}", err=True)
        sys.exit(EXIT_IO)
    except OracleMismatch as e:
        click.echo(f"oracle mismatch: {e}", err=True)
        sys.exit(EXIT_MISMATCH)
    sys.exit(EXIT_OK)


@main.command("analyze")
@click.argument("config", type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", type=click.Path(), default=None, help="CSV path.")
def analyze_cmd(config, seed, out):
    """Term counts and essential-bit statistics only (no timing)."""
    try:
        cfg = _load(config, seed)
        terms, bits = analyze(cfg)
        lines = analyze_csv_lines(cfg, terms, bits)
        if out:
            _write_lines(out, lines)
        click.echo("\n".join(lines))
    except ConfigError as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    except TraceIOError as e:
        click.echo(f"i/o error: {e}", err=True)
        sys.exit(EXIT_IO)
    sys.exit(EXIT_OK)


@main.command("gen-trace")
@click.argument("config", type=click.Path())
@click.option("-o", "--out", type=click.Path(), required=True, help="Trace file path.")
@click.option("--layer", type=int, default=0, help="Layer index to generate for.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
def gen_trace_cmd(config, out, layer, seed):
    """Generate one layer's synthetic input tensor as a trace file."""
    try:
        cfg = _load(config, seed)
        if not 0 <= layer < len(cfg.layers):
            raise ConfigError(f"layer index {layer} out of range")
        tensor, _ = build_layer_inputs(cfg, cfg.layers[layer], layer)
        dtype = DTYPE_U8 if cfg.width == 8 else DTYPE_I16
        write_trace(out, tensor, dtype)
        click.echo(f"wrote {out}: dims {tensor.dims}, width {cfg.width}")
    except ConfigError as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    except (TraceIOError, ValueError) as e:
        click.echo(f"i/o error: {e}", err=True)
        sys.exit(EXIT_IO)
    sys.exit(EXIT_OK)


@main.command("validate")
@click.argument("config", type=click.Path())
def validate_cmd(config):
    """Parse the config and dry-run its consistency checks."""
    try:
        cfg = load_config(config)
    except ConfigError as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(
        f"ok: {len(cfg.layers)} layer(s), {len(cfg.engines)} engine variant(s), "
        f"width {cfg.width}, seed {cfg.seed}"
    )
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
