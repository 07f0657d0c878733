"""Command-line front end.

    gbverify run <config.json> --out <dir> [--tolerance X] [--print-effective-config]
    gbverify families

Exit codes: 0 all checks PASS, 1 some check FAILed, 2 invalid config,
3 numerical error (non-finite samples).

Defaults (all overridable in the config):

=============================  ==============================================
field                          default
=============================  ==============================================
surface.tau                    [0, 1]   (torus only)
metric.params                  {}
metric.perturbations           []
divisor                        []       (family divisor is always used)
scheme.excision_ladder         null -> 0.1*2^-k, k=0..8 (k=0..40 with cusps)
scheme.radial_levels           32
scheme.angular_count           256
scheme.bulk_resolution         64
scheme.richardson_order        null -> fitted
scheme.points_per_cell         4
scheme.sphere_seam             1.0
scheme.circle_samples          512
checks                         ["gauss_bonnet"] on compact surfaces,
                               ["flux", "decay"] on disk patches
checks[].n (hurwitz)           2
checks[].p (lp)                1
tolerance                      1e-4
=============================  ==============================================
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import GBVerifyError, NumericalError, UnsupportedConfigurationError, ValidationError
from .metric import FAMILIES, Bump, ConformalMetric, build_family, perturb
from .quadrature import GradedScheme, curvature_lp_norm, dirichlet_energy
from .surface import Surface, euler_characteristic
from .verify import (CIRCLE_SAMPLES, DEFAULT_TOLERANCE, IDENTITY_TOLERANCE, VerificationReport,
                     cusp_flux, flux_decomposition, flux_records, greens_identity_ladder,
                     lemma_decay, riemann_hurwitz_check, verify_gauss_bonnet)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

SCHEME_DEFAULTS = {
    "excision_ladder": None,
    "radial_levels": 32,
    "angular_count": 256,
    "bulk_resolution": 64,
    "richardson_order": None,
    "points_per_cell": 4,
    "sphere_seam": 1.0,
    "circle_samples": CIRCLE_SAMPLES,
}


def load_schema(name: str) -> dict:
    text = resources.files("gbverify").joinpath("schemas", name).read_text(encoding="utf-8")
    return json.loads(text)


def _path(parts) -> str:
    out = ""
    for part in parts:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def effective_config(raw: dict) -> dict:
    """Validate structure and fill every default."""
    validator = jsonschema.Draft202012Validator(load_schema("config.schema.json"))
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise ValidationError(err.message, _path(err.absolute_path))
    cfg = copy.deepcopy(raw)
    surface = cfg["surface"]
    if surface["model"] == "torus":
        surface.setdefault("tau", [0.0, 1.0])
    if surface["model"] == "disk" and "radius" not in surface:
        raise ValidationError("disk patch requires a radius", "surface.radius")
    metric = cfg["metric"]
    metric.setdefault("params", {})
    metric.setdefault("perturbations", [])
    cfg.setdefault("divisor", [])
    scheme = dict(SCHEME_DEFAULTS)
    scheme.update(cfg.get("scheme", {}))
    cfg["scheme"] = scheme
    default_checks = ["gauss_bonnet"] if surface["model"] != "disk" else ["flux", "decay"]
    checks = []
    for item in cfg.get("checks", default_checks):
        entry = {"check": item} if isinstance(item, str) else dict(item)
        if entry["check"] == "hurwitz":
            entry.setdefault("n", 2)
        if entry["check"] == "lp":
            entry.setdefault("p", 1.0)
        checks.append(entry)
    cfg["checks"] = checks
    cfg.setdefault("tolerance", DEFAULT_TOLERANCE)
    return cfg


def _surface(cfg: dict) -> Surface:
    s = cfg["surface"]
    if s["model"] == "torus":
        return Surface.torus(complex(*s["tau"]))
    if s["model"] == "disk":
        return Surface.disk(s["radius"])
    return Surface.sphere()


def build_metric(cfg: dict) -> ConformalMetric:
    surface = _surface(cfg)
    metric = build_family(cfg["metric"]["family"], surface, cfg["metric"]["params"])
    for i, entry in enumerate(cfg["divisor"]):
        field = f"divisor[{i}]"
        chart = entry["chart"]
        if chart not in surface.charts:
            raise ValidationError(f"chart {chart!r} not in atlas {surface.charts}", f"{field}.chart")
        loc = complex(*entry["location"])
        match = [p for p in metric.divisor if p.chart == chart and abs(p.location - loc) <= 1e-12]
        if match:
            p = match[0]
            if p.kind != entry["kind"]:
                raise ValidationError(f"family has a {p.kind} here", f"{field}.kind")
            if p.kind == "cone" and abs(p.order - entry["order"]) > 1e-12:
                raise ValidationError(f"family has order {p.order:g} here", f"{field}.order")
            continue
        if entry["kind"] != "cone" or entry["order"] != 0:
            raise ValidationError(
                "family metric is regular here; only order-0 marked points may be added",
                f"{field}.order" if entry["kind"] == "cone" else f"{field}.kind",
            )
        try:
            metric = metric.with_marked_point(chart, loc)
        except ValidationError as exc:
            raise ValidationError(str(exc), f"{field}.location") from exc
    for i, pert in enumerate(cfg["metric"]["perturbations"]):
        try:
            metric = perturb(metric, Bump(complex(*pert["center"]), pert["amplitude"], pert["width"]))
        except ValidationError as exc:
            raise ValidationError(str(exc), f"metric.perturbations[{i}]") from exc
    return metric


def build_scheme(cfg: dict) -> GradedScheme:
    s = {k: v for k, v in cfg["scheme"].items() if k != "circle_samples"}
    if s["excision_ladder"] is not None:
        s["excision_ladder"] = tuple(s["excision_ladder"])
    return GradedScheme(**s)


def _validate_checks(cfg: dict, metric: ConformalMetric):
    for i, entry in enumerate(cfg["checks"]):
        name = entry["check"]
        if name in ("gauss_bonnet", "green", "hurwitz") and not metric.surface.is_compact:
            raise ValidationError(f"{name} requires a compact surface", f"checks[{i}]")
        if name == "hurwitz":
            if metric.surface.model != "sphere":
                raise ValidationError("hurwitz requires a sphere metric", f"checks[{i}]")
            if any(p.location != 0 or p.is_cusp for p in metric.divisor):
                raise ValidationError("hurwitz requires cone points only at 0 and infinity",
                                      f"checks[{i}]")


def write_csv(path: Path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["epsilon", "value"])
        for eps, value in rows:
            writer.writerow([format(float(eps), ".17g"), format(float(value), ".17g")])


def run_checks(cfg: dict, metric: ConformalMetric, scheme: GradedScheme):
    """Run the configured checks; returns (report dict, csv tables, summary lines)."""
    tol = cfg["tolerance"]
    n = cfg["scheme"]["circle_samples"]
    ladder = scheme.ladder_for(metric)
    tables: dict[str, list] = {}
    checks: dict[str, dict] = {}
    lines: list[str] = []
    report = None
    hypotheses: dict = {}

    for entry in cfg["checks"]:
        name = entry["check"]
        if name == "gauss_bonnet":
            report = verify_gauss_bonnet(metric, scheme, tol, n)
            tables["ladder_gauss_bonnet_total"] = report.ladder_diagnostics["ladder"]
            checks[name] = {"verdict": report.verdict, "residual": report.residual}
            hypotheses.update(report.hypothesis_checks)
            lines.append(f"gauss_bonnet: {report.verdict}  chi={report.chi:.12g}  "
                         f"total/2pi={report.total_curvature_over_2pi:.12g}  "
                         f"residual={report.residual:.3e}")
        elif name == "green":
            rows = greens_identity_ladder(metric, None, scheme, n=n)
            worst = max(d for _, d in rows)
            verdict = "PASS" if worst <= tol else "FAIL"
            tables["ladder_green_total"] = rows
            checks[name] = {"verdict": verdict, "max_discrepancy": worst}
            lines.append(f"green: {verdict}  max discrepancy={worst:.3e}")
        elif name == "flux":
            worst = 0.0
            for i, p in enumerate(metric.divisor):
                rows = []
                for eps in ladder:
                    split = (cusp_flux if p.is_cusp else flux_decomposition)(metric, i, eps, n)
                    worst = max(worst, split.mismatch)
                    rows.append((eps, split.residual_flux))
                tables[f"ladder_flux_p{i}"] = rows
            verdict = "PASS" if worst <= IDENTITY_TOLERANCE else "FAIL"
            checks[name] = {"verdict": verdict, "max_mismatch": worst}
            lines.append(f"flux: {verdict}  max identity mismatch={worst:.3e}")
        elif name == "decay":
            per_point = []
            for i in range(len(metric.divisor)):
                res = lemma_decay(metric, i, scheme, n)
                tables[f"ladder_decay_p{i}"] = [(e, a) for e, a, _ in res.ladder]
                per_point.append({"point": f"p{i}", "verdict": res.verdict, "exponent": res.exponent})
            verdict = "PASS" if all(r["verdict"] == "PASS" for r in per_point) else "FAIL"
            checks[name] = {"verdict": verdict, "points": per_point}
            lines.append(f"decay: {verdict}  exponents="
                         + ", ".join(f"{r['point']}:{r['exponent']}" for r in per_point))
        elif name == "lp":
            res = curvature_lp_norm(metric, entry["p"], scheme)
            tables["ladder_lp_total"] = res.ladder
            verdict = "PASS" if res.verdict == "bounded" else "FAIL"
            hypotheses["l1" if entry["p"] == 1 else f"l{entry['p']:g}"] = {
                "verdict": res.verdict, "value": res.value, "growth_exponent": res.exponent}
            checks[name] = {"verdict": verdict, "p": entry["p"], "norm_verdict": res.verdict,
                            "value": res.value}
            lines.append(f"lp: {verdict}  p={entry['p']:g}  {res.verdict}  value={res.value:.12g}")
        elif name == "energy":
            per_point = []
            for i in range(len(metric.divisor)):
                res = dirichlet_energy(metric, i, None, scheme)
                tables[f"ladder_energy_p{i}"] = res.ladder
                per_point.append({"point": f"p{i}", "verdict": res.verdict, "value": res.value})
            hypotheses["energy"] = per_point
            verdict = "PASS" if all(r["verdict"] == "bounded" for r in per_point) else "FAIL"
            checks[name] = {"verdict": verdict, "points": per_point}
            lines.append(f"energy: {verdict}  " + ", ".join(
                f"{r['point']}:{r['verdict']}" for r in per_point))
        elif name == "hurwitz":
            res = riemann_hurwitz_check(metric, entry["n"], scheme, tol)
            tables["ladder_hurwitz_total"] = res.ladder
            checks[name] = {"verdict": res.verdict, "n": res.degree, "chi_base": res.chi_base,
                            "chi_pullback": res.chi_pullback,
                            "total_pullback_over_2pi": res.total_pullback_over_2pi,
                            "arithmetic_residual": res.arithmetic_residual,
                            "quadrature_residual": res.quadrature_residual}
            lines.append(f"hurwitz: {res.verdict}  n={res.degree}  chi={res.chi_base:g}  "
                         f"chi'={res.chi_pullback:g}  total'/2pi={res.total_pullback_over_2pi:.12g}")

    if report is None:
        chi = (euler_characteristic(metric.surface, metric.divisor)
               if metric.surface.is_compact else None)
        report = VerificationReport(chi, None, None,
                                    per_singularity=flux_records(metric, ladder, n),
                                    tolerance=tol)
    report.hypothesis_checks = hypotheses
    doc = report.to_dict()
    doc["metric"] = {"family": metric.family, "surface": metric.surface.model}
    doc["checks"] = _jsonable_checks(checks)
    return doc, tables, lines


def _jsonable_checks(checks):
    return json.loads(json.dumps(checks, allow_nan=False,
                                 default=lambda o: None))


def cmd_run(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        print(f"config error: line {exc.lineno}: {exc.msg}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.tolerance is not None:
            raw = dict(raw)
            raw["tolerance"] = args.tolerance
        cfg = effective_config(raw)
        if args.print_effective_config:
            print(json.dumps(cfg, indent=2))
        metric = build_metric(cfg)
        scheme = build_scheme(cfg)
        _validate_checks(cfg, metric)
    except (ValidationError, UnsupportedConfigurationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        # non-finite samples are detected explicitly and reported with their location
        with np.errstate(all="ignore"):
            doc, tables, lines = run_checks(cfg, metric, scheme)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValidationError, UnsupportedConfigurationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GBVerifyError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n",
                                     encoding="utf-8")
    for name, rows in tables.items():
        write_csv(out / f"{name}.csv", rows)
    print(f"{metric.family} on {metric.surface.model}")
    for line in lines:
        print("  " + line)
    passed = all(c["verdict"] == "PASS" for c in doc["checks"].values())
    print("ALL PASS" if passed else "FAILED")
    return EXIT_OK if passed else EXIT_FAIL


def families_catalog() -> str:
    lines = []
    for info in FAMILIES.values():
        lines.append(f"{info.name}: chi = {info.chi}")
        params = ", ".join(info.params) or "none"
        lines.append(f"    surface: {info.surface}; params: {params}")
        lines.append(f"    divisor: {info.divisor}")
        lines.append(f"    total curvature: {info.total_curvature}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gbverify",
                                     description="Numerical Gauss-Bonnet checks for singular metrics")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the checks of an experiment config")
    run.add_argument("config")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--tolerance", type=float, default=None)
    run.add_argument("--print-effective-config", action="store_true")
    sub.add_parser("families", help="list built-in metric families")
    args = parser.parse_args(argv)
    if args.command == "families":
        print(families_catalog())
        return EXIT_OK
    return cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
