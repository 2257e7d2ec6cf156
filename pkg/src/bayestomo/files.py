"""Plot-ready output files: chains, summaries, marginals and Wigner grids.

CSV outputs start with ``# key=value`` provenance lines (seed, config hash,
format version) followed by a header row.  JSON outputs carry the same
fields under ``"provenance"``.  Floats are written with 17 significant
digits.
"""

from __future__ import annotations

import hashlib
import io
import json
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import Marginal
from .data import DataFormatError
from .reconstruct import WignerGrid
from .sampler import Chain, ProposalSpec

FORMAT_VERSION = "1"
CHAIN_HEADER = "iter,v_x,v_p,v_phi,log_lik,accepted"


def fmt(x) -> str:
    return format(float(x), ".17g")


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def provenance(seed, config: dict) -> dict:
    return {
        "seed": seed,
        "config_hash": config_hash(config),
        "format_version": FORMAT_VERSION,
        "package_version": __version__,
    }


def provenance_lines(prov: dict, extra: dict | None = None) -> list[str]:
    items = dict(prov)
    items.update(extra or {})
    return [f"{k}={v}" for k, v in items.items()]


def _comment_block(lines) -> str:
    return "".join(f"# {line}\n" for line in lines)


def read_comments(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            out[key.strip()] = value.strip()
    return out


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, default=_json_default, allow_nan=True) + "\n",
                          encoding="utf-8")


# --- chains ------------------------------------------------------------------

def write_chain(path, chain: Chain, prov: dict) -> None:
    extra = {
        "chain_index": chain.chain_index,
        "burn_in": chain.burn_in,
        "thin": chain.thin,
        "proposal": " ".join(fmt(s) for s in chain.proposal.as_array()),
    }
    if chain.initial_proposal is not None:
        extra["initial_proposal"] = " ".join(fmt(s) for s in chain.initial_proposal.as_array())
    buf = io.StringIO()
    buf.write(_comment_block(provenance_lines(prov, extra)))
    buf.write(CHAIN_HEADER + "\n")
    for t in range(len(chain)):
        v = chain.samples[t]
        buf.write(f"{t},{fmt(v[0])},{fmt(v[1])},{fmt(v[2])},{fmt(chain.log_lik[t])},{int(chain.accepted[t])}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_table(path, header: str) -> np.ndarray:
    """Numeric rows of a CSV file that has ``#`` comment lines and the given header."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if not ln.startswith("#")]
    if not lines or lines[0].strip() != header:
        raise DataFormatError(f"{path}: expected header {header!r}")
    ncol = header.count(",") + 1
    try:
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln.strip()], dtype=float)
    except ValueError:
        raise DataFormatError(f"{path}: non-numeric entry") from None
    if rows.size == 0 or rows.ndim != 2 or rows.shape[1] != ncol:
        raise DataFormatError(f"{path}: expected {ncol} columns per row")
    return rows


def read_chain(path) -> Chain:
    meta = read_comments(path)
    rows = read_table(path, CHAIN_HEADER)
    for key in ("burn_in", "thin", "seed"):
        if key not in meta:
            raise DataFormatError(f"{path}: chain file lacks '# {key}=' metadata")
    proposal = ProposalSpec.from_array(meta["proposal"].split()) if "proposal" in meta else ProposalSpec()
    initial = ProposalSpec.from_array(meta["initial_proposal"].split()) if "initial_proposal" in meta else None
    return Chain(
        samples=rows[:, 1:4].copy(),
        log_lik=rows[:, 4].copy(),
        accepted=rows[:, 5].astype(bool),
        seed=int(meta["seed"]),
        proposal=proposal,
        burn_in=int(meta["burn_in"]),
        thin=int(meta["thin"]),
        chain_index=int(meta.get("chain_index", 0)),
        initial_proposal=initial,
    )


def chain_paths(directory) -> list[Path]:
    paths = sorted(Path(directory).glob("chain_*.csv"))
    if not paths:
        raise FileNotFoundError(f"no chain_*.csv files in {directory}")
    return paths


def write_chains(directory, chains, prov: dict) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for chain in chains:
        path = directory / f"chain_{chain.chain_index:02d}.csv"
        write_chain(path, chain, prov)
        paths.append(path)
    return paths


def read_chains(directory) -> list[Chain]:
    return [read_chain(p) for p in chain_paths(directory)]


# --- marginals and grids -----------------------------------------------------

def write_marginal(path, marginal: Marginal, prov: dict, extra: dict | None = None) -> None:
    buf = io.StringIO()
    buf.write(_comment_block(provenance_lines(prov, {"quantity": marginal.name, **(extra or {})})))
    buf.write("center,density\n")
    for c, d in zip(marginal.centers, marginal.density):
        buf.write(f"{fmt(c)},{fmt(d)}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_wigner(path, grid: WignerGrid, prov: dict) -> None:
    buf = io.StringIO()
    buf.write(_comment_block(provenance_lines(prov, {"n_samples": grid.n_samples})))
    buf.write("x,p,mean,std\n")
    for i, x in enumerate(grid.x_axis):
        sx = fmt(x)
        for j, p in enumerate(grid.p_axis):
            buf.write(f"{sx},{fmt(p)},{fmt(grid.mean[i, j])},{fmt(grid.std[i, j])}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_wigner(path) -> WignerGrid:
    rows = read_table(path, "x,p,mean,std")
    x_axis = np.unique(rows[:, 0])
    p_axis = np.unique(rows[:, 1])
    shape = (x_axis.size, p_axis.size)
    meta = read_comments(path)
    return WignerGrid(x_axis, p_axis, rows[:, 2].reshape(shape), rows[:, 3].reshape(shape),
                      int(meta.get("n_samples", 0)))
