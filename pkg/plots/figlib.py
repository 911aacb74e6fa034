"""Figure construction from run artifacts.

Every renderer consumes only the documented interchange formats: profile
CSVs with their JSON sidecars, solve/boundlab report JSONs, energy CSVs,
and the run manifests written next to each output.  Scripts are read-only
consumers; the requested image is the only file ever written.
"""

import csv
import dataclasses
import json
import os
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("profile", "residual", "envelope", "jslope", "energy")


class SchemaError(ValueError):
    """An input file does not match its documented schema."""


@dataclasses.dataclass(frozen=True)
class FigureSpec:
    """One figure request: input artifacts, output image, and plot kind."""

    inputs: tuple
    output: str
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown plot kind '{self.kind}'")
        if not self.inputs:
            raise SchemaError("at least one input artifact is required")
        for path in self.inputs:
            if not os.path.exists(path):
                raise SchemaError(f"input file does not exist: {path}")


# ---------------------------------------------------------------- readers


def _read_csv(path: str, columns: tuple) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"empty CSV: {path}") from None
        for col in columns:
            if col not in header:
                raise SchemaError(f"schema mismatch in {path}: missing column '{col}'")
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"empty CSV: {path}")
    idx = {col: header.index(col) for col in columns}
    out = {}
    for col in columns:
        try:
            out[col] = np.array([float(row[idx[col]]) for row in rows])
        except (ValueError, IndexError):
            raise SchemaError(
                f"schema mismatch in {path}: non-numeric value in column '{col}'"
            ) from None
    return out


def read_profile(path: str) -> dict:
    """Profile CSV plus its JSON sidecar (grid and envelope exponents)."""
    data = _read_csv(path, ("eta", "re_chi", "im_chi"))
    sidecar = path + ".json"
    if not os.path.exists(sidecar):
        raise SchemaError(f"missing profile sidecar: {sidecar}")
    with open(sidecar) as fh:
        meta = json.load(fh)
    for key in ("z1", "z2"):
        if key not in meta:
            raise SchemaError(f"schema mismatch in {sidecar}: missing key '{key}'")
    data["z1"] = float(meta["z1"])
    data["z2"] = float(meta["z2"])
    return data


def read_report(path: str, keys: tuple) -> dict:
    with open(path) as fh:
        try:
            report = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"schema mismatch in {path}: not valid JSON ({exc})") from None
    for key in keys:
        if key not in report:
            raise SchemaError(f"schema mismatch in {path}: missing key '{key}'")
    return report


def read_manifest(path: str) -> dict:
    """Manifest written next to an artifact, or an empty dict if absent."""
    manifest = path + ".manifest.json"
    if not os.path.exists(manifest):
        return {}
    with open(manifest) as fh:
        return json.load(fh)


def _envelope(u: np.ndarray, z1: float, z2: float) -> np.ndarray:
    z = np.where(u <= 1.0, z1, z2)
    return u**z * np.exp(-u)


def _positive_branch(data: dict) -> tuple:
    mask = data["eta"] > 0
    u = data["eta"][mask]
    chi = np.hypot(data["re_chi"][mask], data["im_chi"][mask])
    return u, chi


# -------------------------------------------------------------- renderers


def _render_profile(spec: FigureSpec, ax) -> None:
    top = 0.0
    for path in spec.inputs:
        data = read_profile(path)
        u, chi = _positive_branch(data)
        modulus = chi * _envelope(u, data["z1"], data["z2"])
        ax.loglog(u, modulus, label=os.path.basename(path))
        top = max(top, float(chi.max()))
    data = read_profile(spec.inputs[0])
    u, _ = _positive_branch(data)
    ax.loglog(
        u,
        top * _envelope(u, data["z1"], data["z2"]),
        "k--",
        label=f"envelope, D = {top:.3g}",
    )
    ax.set_xlabel("eta")
    ax.set_ylabel("|profile|")
    ax.set_title("profile modulus under its envelope")


def _render_residual(spec: FigureSpec, ax) -> None:
    for path in spec.inputs:
        report = read_report(path, ("history",))
        history = report["history"]
        if not history:
            raise SchemaError(f"schema mismatch in {path}: empty history")
        its = [int(it) for it, _ in history]
        res = [float(r) for _, r in history]
        label = os.path.basename(path)
        if "beta" in report:
            label += f" (beta = {report['beta']:g})"
        ax.semilogy(its, res, marker="o", label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative residual")
    ax.set_title("fixed-point residual history")


def _render_envelope(spec: FigureSpec, ax) -> None:
    for path in spec.inputs:
        data = read_profile(path)
        u, chi = _positive_branch(data)
        power = chi * _envelope(u, data["z1"], data["z2"]) * np.exp(u)
        ax.loglog(u, power, ".", ms=3, label=os.path.basename(path))
    # reference slopes from the first input's sidecar, anchored on its data
    data = read_profile(spec.inputs[0])
    u, chi = _positive_branch(data)
    power = chi * _envelope(u, data["z1"], data["z2"]) * np.exp(u)
    inner, outer = u[u <= 1.0], u[u >= 1.0]
    if inner.size:
        ax.loglog(
            inner,
            power[u <= 1.0][0] * (inner / inner[0]) ** data["z1"],
            "k--",
            label=f"inner slope {data['z1']:.3g}",
        )
    if outer.size:
        ax.loglog(
            outer,
            power[u >= 1.0][0] * (outer / outer[0]) ** data["z2"],
            "k:",
            label=f"outer slope {data['z2']:.3g}",
        )
    ax.set_xlabel("eta")
    ax.set_ylabel("|profile| e^{+eta}")
    ax.set_title("envelope power laws")


def _render_jslope(spec: FigureSpec, ax) -> None:
    path = spec.inputs[0]
    report = read_report(path, ("fitted_exponent_small", "fitted_exponent_large"))
    fitted = [report["fitted_exponent_small"], report["fitted_exponent_large"]]
    pos = np.arange(2)
    ax.bar(pos - 0.15, fitted, width=0.3, label="fitted")
    extras = read_manifest(path).get("extras", {})
    if "predicted_small" in extras and "predicted_large" in extras:
        predicted = [extras["predicted_small"], extras["predicted_large"]]
        ax.bar(pos + 0.15, predicted, width=0.3, label="predicted")
    ax.set_xticks(pos, ["small window", "large window"])
    ax.set_ylabel("log-log slope")
    title = "window-integral slopes"
    if "K_empirical" in report:
        title += f" (K = {report['K_empirical']:.3g})"
    ax.set_title(title)


def _render_energy(spec: FigureSpec, ax) -> None:
    path = spec.inputs[0]
    data = _read_csv(path, ("t", "E", "kinetic", "potential"))
    extras = read_manifest(path).get("extras", {})
    if "r" not in extras:
        raise SchemaError(f"schema mismatch in {path}.manifest.json: missing extras key 'r'")
    r = int(extras["r"])
    horizon = float(extras.get("T", 1.0))
    s = horizon - data["t"]
    order = np.argsort(s)
    s = s[order]
    ax.loglog(s, np.abs(data["E"])[order], "o-", label="E")
    ax.loglog(s, data["kinetic"][order], ".--", alpha=0.6, label="kinetic")
    ax.loglog(s, data["potential"][order], ".:", alpha=0.6, label="potential")
    slope = -(2.0 + r) / (2.0 * r)
    anchor = np.abs(data["E"])[order][0]
    ax.loglog(
        s,
        anchor * (s / s[0]) ** slope,
        "k--",
        label=f"reference slope {slope:g}",
    )
    ax.set_xlabel("T - t")
    ax.set_ylabel("E(t)")
    ax.set_title(f"energy blow-up, r = {r}")


_RENDERERS = {
    "profile": _render_profile,
    "residual": _render_residual,
    "envelope": _render_envelope,
    "jslope": _render_jslope,
    "energy": _render_energy,
}


def render(spec: FigureSpec):
    """Build the figure for spec, write spec.output, and return the figure."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    try:
        _RENDERERS[spec.kind](spec, ax)
        ax.legend(fontsize=8)
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        fig.savefig(spec.output, dpi=120)
    except Exception:
        plt.close(fig)
        raise
    return fig


def main_render(spec_inputs, output: str, kind: str) -> int:
    """Script entry: render and translate failures to exit codes."""
    try:
        spec = FigureSpec(inputs=tuple(spec_inputs), output=output, kind=kind)
        fig = render(spec)
        plt.close(fig)
    except (SchemaError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
