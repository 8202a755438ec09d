"""Command-line surface: parse ARS definitions and run the library.

Config grammar: one ``key = value`` per line, ``#`` comments.  Required keys
are ``group`` (aff2 | heis3), the derivation parameters ``derivation.a`` ...
(``a``, ``b`` for aff2; ``a`` ... ``f`` for heis3) and the frame coefficient
lists ``frame.1`` (and ``frame.2`` for heis3).  Optional keys: ``tol``,
``box`` (lo,hi), ``resolution``, and the command inputs ``point``,
``vector``, ``covector`` (comma lists), ``time`` and ``steps`` plus
``candidate.1`` ... ``candidate.n`` (rows of a candidate automorphism).
Numbers are decimals or rationals ``p/q``.

Exit codes: 0 success, 2 validation failure, 3 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from .classify import classify
from .geodesy import (
    CotangentState,
    connected_components,
    geodesic_shoot,
    locus_sample,
    tangency_points,
)
from .group import GroupPoint, TangentVector
from .linfield import flow, linear_field
from .metric import (
    ARSSpec,
    ars_norm,
    isometry_candidate_check,
    make_ars,
    validate,
)
from .report import (
    format_number,
    render_geodesic_svg,
    render_locus_svg,
    write_csv,
)

COMMANDS = ("validate", "classify", "locus", "norm", "flow", "geodesic",
            "tangency", "components", "isometry-check")

_DERIV_KEYS = {"aff2": ("a", "b"), "heis3": ("a", "b", "c", "d", "e", "f")}


class ConfigError(ValueError):
    """Malformed configuration; the message carries the line number."""


@dataclass(frozen=True)
class ConfigDocument:
    group: str
    derivation: dict
    frame: tuple
    tol: float | None = None
    box: tuple | None = None
    resolution: int | None = None
    extras: dict = field(default_factory=dict)
    source: str = ""


@dataclass(frozen=True)
class ResultRecord:
    command: str
    digest: str
    payload: tuple            # lines of the text record
    diagnostics: tuple = ()
    exit_code: int = 0
    files: tuple = ()         # paths written alongside the record

    def text(self) -> str:
        lines = [f"command = {self.command}", f"digest = {self.digest}"]
        lines.extend(self.payload)
        lines.extend(f"diagnostic = {d}" for d in self.diagnostics)
        lines.extend(f"file = {f}" for f in self.files)
        return "\n".join(lines) + "\n"


def parse_number(text: str):
    """Decimal or rational ``p/q``; integers stay exact (Fraction)."""
    text = text.strip()
    if "/" in text:
        num, _, den = text.partition("/")
        return Fraction(int(num.strip()), int(den.strip()))
    try:
        return Fraction(int(text))
    except ValueError:
        pass
    return float(text)


def _parse_list(text: str):
    return tuple(parse_number(part) for part in text.split(","))


_SCALAR_KEYS = {"group", "tol", "resolution", "time", "steps"}
_LIST_KEYS = {"frame.1", "frame.2", "box", "point", "vector", "covector",
              "candidate.1", "candidate.2", "candidate.3"}


def parse_config(text: str) -> ConfigDocument:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        deriv = key.startswith("derivation.") and key[11:] in "abcdef" \
            and len(key) == 12
        if key not in _SCALAR_KEYS and key not in _LIST_KEYS and not deriv:
            raise ConfigError(f"line {lineno}: unknown key: {key}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key: {key}")
        if key == "group":
            if value not in ("aff2", "heis3"):
                raise ConfigError(f"line {lineno}: group must be aff2 or "
                                  f"heis3, got {value!r}")
            values[key] = value
            continue
        try:
            if key in _LIST_KEYS:
                values[key] = _parse_list(value)
            elif key in ("resolution", "steps"):
                values[key] = int(value)
            elif key in ("tol", "time"):
                values[key] = float(Fraction(parse_number(value)))
            else:
                values[key] = parse_number(value)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(
                f"line {lineno}: malformed number in {key}: {value!r}"
            ) from None

    if "group" not in values:
        raise ConfigError("missing key: group")
    tag = values["group"]
    dim = 2 if tag == "aff2" else 3
    derivation = {}
    for name in _DERIV_KEYS[tag]:
        key = f"derivation.{name}"
        if key not in values:
            raise ConfigError(f"missing key: {key}")
        derivation[name] = values[key]
    frame = []
    for i in range(1, dim):
        key = f"frame.{i}"
        if key not in values:
            raise ConfigError(f"missing key: {key}")
        vec = values[key]
        if len(vec) != dim:
            raise ConfigError(f"{key} needs {dim} coefficients")
        frame.append(vec)
    box = values.get("box")
    if box is not None and len(box) != 2:
        raise ConfigError("box needs exactly two bounds: lo,hi")
    extras = {k: v for k, v in values.items()
              if k in ("point", "vector", "covector", "time", "steps",
                       "candidate.1", "candidate.2", "candidate.3")}
    return ConfigDocument(
        group=tag, derivation=derivation, frame=tuple(frame),
        tol=values.get("tol"),
        box=tuple(float(b) for b in box) if box else None,
        resolution=values.get("resolution"), extras=extras, source=text,
    )


def build_spec(config: ConfigDocument) -> ARSSpec:
    from .algebra import algebra_model, derivation_space

    model = algebra_model(config.group)
    D = derivation_space(model).construct(**config.derivation)
    return make_ars(config.group, D, config.frame, require_valid=False)


# ---------------------------------------------------------------------------
# canonical class serialization (line-oriented, reparseable)


def serialize_class(cls, prefix: str) -> list[str]:
    lines = [f"{prefix}.level = {cls.level}",
             f"{prefix}.family = {cls.family}"]
    for name in sorted(cls.parameters):
        lines.append(
            f"{prefix}.parameter.{name} = "
            f"{format_number(cls.parameters[name])}")
    for i, row in enumerate(cls.D, start=1):
        lines.append(f"{prefix}.D.{i} = "
                     + ",".join(format_number(x) for x in row))
    for i, vec in enumerate(cls.frame, start=1):
        lines.append(f"{prefix}.frame.{i} = "
                     + ",".join(format_number(x) for x in vec))
    for d in cls.diagnostics:
        lines.append(f"{prefix}.diagnostic = {d}")
    return lines


def parse_class_record(text: str, prefix: str) -> dict:
    """Reparse a serialized class: level, family, parameters, D, frame."""
    out: dict = {"parameters": {}, "D": {}, "frame": {}, "diagnostics": []}
    for line in text.splitlines():
        if not line.startswith(prefix + "."):
            continue
        key, _, value = line.partition("=")
        key, value = key[len(prefix) + 1:].strip(), value.strip()
        if key in ("level", "family"):
            out[key] = value
        elif key.startswith("parameter."):
            out["parameters"][key[10:]] = parse_number(value)
        elif key.startswith("D."):
            out["D"][int(key[2:])] = _parse_list(value)
        elif key.startswith("frame."):
            out["frame"][int(key[6:])] = _parse_list(value)
        elif key == "diagnostic":
            out["diagnostics"].append(value)
    out["D"] = tuple(out["D"][i] for i in sorted(out["D"]))
    out["frame"] = tuple(out["frame"][i] for i in sorted(out["frame"]))
    return out


def _format_point(coords) -> str:
    return "(" + ", ".join(format_number(c) for c in coords) + ")"


def _group_lines(desc) -> list[str]:
    lines = [f"group.kind = {desc.kind}",
             f"group.translations = {desc.translations.kind}: "
             f"{desc.translations.description}"]
    for i, gen in enumerate(desc.generators, start=1):
        flat = ";".join(",".join(format_number(x) for x in row)
                        for row in gen)
        lines.append(f"group.generator.{i} = {flat}")
    if desc.continuous_family:
        lines.append("group.continuous = true")
    for note in desc.notes:
        lines.append(f"group.note = {note}")
    return lines


# ---------------------------------------------------------------------------
# commands


def _need(config: ConfigDocument, key: str):
    if key not in config.extras:
        raise ConfigError(f"command needs config key: {key}")
    return config.extras[key]


def _point(config: ConfigDocument) -> GroupPoint:
    return GroupPoint(config.group,
                      tuple(float(c) for c in _need(config, "point")))


def run_command(name: str, config: ConfigDocument, flags: dict | None = None
                ) -> ResultRecord:
    flags = dict(flags or {})
    if name not in COMMANDS:
        raise ValueError(f"unknown command: {name}")
    digest_src = name + "\n" + config.source + "\n" + repr(sorted(
        (k, str(v)) for k, v in flags.items()))
    digest = hashlib.sha256(digest_src.encode("utf-8")).hexdigest()

    spec = build_spec(config)
    validity = validate(spec)
    payload: list[str] = [f"group = {config.group}"]
    diagnostics: list[str] = list(validity.messages)
    files: list[str] = []

    if name == "validate":
        payload.append(f"rank_condition_ok = "
                       f"{str(validity.rank_condition_ok).lower()}")
        payload.append(f"open_dense_ok = {str(validity.open_dense_ok).lower()}")
        code = 0 if validity.ok else 2
        return ResultRecord(name, digest, tuple(payload),
                            tuple(diagnostics), code)

    if not validity.ok:
        payload.append("error = spec failed validation")
        return ResultRecord(name, digest, tuple(payload),
                            tuple(diagnostics), 2)

    box = flags.get("box") or config.box or (-3.0, 3.0)
    resolution = flags.get("resolution") or config.resolution or 64
    out = flags.get("out")
    z_slice = flags.get("slice", 0.0)

    if name == "classify":
        report = classify(spec)
        for level in ("isometry", "rescaled", "deformed"):
            cls = report[level]
            if cls is not None:
                payload.extend(serialize_class(cls, level))
        payload.extend(_group_lines(report["group"]))

    elif name == "locus":
        pts = locus_sample(spec, box=box, resolution=resolution)
        payload.append(f"locus.samples = {len(pts)}")
        if out:
            header = ["x", "y", "z"][: spec.dim]
            csv_path = f"{out}_locus.csv"
            write_csv(csv_path, header, [tuple(float(v) for v in p)
                                         for p in pts])
            files.append(csv_path)
            svg_path = f"{out}_locus.svg"
            bounds = ((box[0], box[1]),) * 2
            render_locus_svg(svg_path, pts, spec.dim, bounds,
                             z_slice=z_slice, resolution=resolution)
            files.append(svg_path)

    elif name == "norm":
        g = _point(config)
        vec = tuple(float(c) for c in _need(config, "vector"))
        value = ars_norm(spec, TangentVector(g, vec))
        payload.append(f"norm = {format_number(value)}")

    elif name == "flow":
        g = _point(config)
        t = float(_need(config, "time"))
        result = flow(linear_field(config.group, spec.D), t, g)
        payload.append(f"flow.point = {_format_point(result.coords)}")

    elif name == "geodesic":
        g = _point(config)
        lam = tuple(float(c) for c in _need(config, "covector"))
        t = float(_need(config, "time"))
        steps = int(config.extras.get("steps", 200))
        trace = geodesic_shoot(spec, CotangentState(g, lam), t, steps)
        payload.append(f"geodesic.samples = {len(trace.times)}")
        payload.append(f"geodesic.energy_drift = "
                       f"{format_number(trace.energy_drift)}")
        if trace.truncated:
            diagnostics.append("trajectory left the chart x > 0; truncated")
        if out:
            names = ["x", "y", "z"][: spec.dim]
            header = (["t"] + names + ["l" + n for n in names] + ["H"])
            rows = []
            for i, t_i in enumerate(trace.times):
                rows.append((t_i, *trace.points[i].coords,
                             *trace.covectors[i], trace.energies[i]))
            csv_path = f"{out}_geodesic.csv"
            write_csv(csv_path, header, rows)
            files.append(csv_path)
            svg_path = f"{out}_geodesic.svg"
            render_geodesic_svg(svg_path, trace, spec.dim)
            files.append(svg_path)

    elif name == "tangency":
        report = tangency_points(spec)
        payload.append(f"tangency.kind = {report.kind}")
        for p in report.points:
            payload.append(f"tangency.point = {_format_point(p)}")
        if report.base is not None:
            payload.append(f"tangency.line.base = "
                           f"{_format_point(report.base)}")
            payload.append(f"tangency.line.direction = "
                           f"{_format_point(report.direction)}")
        if report.description:
            payload.append(f"tangency.description = {report.description}")

    elif name == "components":
        count = connected_components(spec, box=box, resolution=resolution)
        payload.append(f"components = {count.count} (box-local)")
        payload.append(f"components.stable = {str(count.stable).lower()}")

    elif name == "isometry-check":
        rows = [config.extras.get(f"candidate.{i}")
                for i in range(1, spec.dim + 1)]
        if any(r is None for r in rows):
            raise ConfigError("command needs config keys candidate.1 ... "
                              f"candidate.{spec.dim}")
        P = tuple(tuple(float(x) for x in row) for row in rows)
        ok = isometry_candidate_check(spec, spec, P)
        payload.append(f"isometry = {str(ok).lower()}")

    return ResultRecord(name, digest, tuple(payload), tuple(diagnostics),
                        0, tuple(files))


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arskit",
        description="Almost-Riemannian structures on aff2 and heis3.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True,
                        help="path to the ARS definition file")
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--box", default=None, help="lo,hi")
    parser.add_argument("--resolution", type=int, default=None)
    parser.add_argument("--out", default=None,
                        help="prefix for CSV/SVG output files")
    parser.add_argument("--slice", dest="slice_", default=None,
                        help="heis3 plot slice, e.g. z=0.5")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 3 if exc.code else 0

    flags: dict = {}
    try:
        if args.box:
            lo, hi = (float(b) for b in args.box.split(","))
            flags["box"] = (lo, hi)
        if args.resolution:
            flags["resolution"] = args.resolution
        if args.out:
            flags["out"] = args.out
        if args.slice_:
            key, _, value = args.slice_.partition("=")
            if key.strip() != "z":
                raise ValueError("only z = const slices are supported")
            flags["slice"] = float(value)
        if args.tol:
            flags["tol"] = args.tol
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 3

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 3

    try:
        config = parse_config(text)
        record = run_command(args.command, config, flags)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    sys.stdout.write(record.text())
    return record.exit_code


if __name__ == "__main__":
    sys.exit(main())
