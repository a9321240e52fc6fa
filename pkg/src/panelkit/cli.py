"""Command-line interface: ``panelkit fit|hausman|factor|simulate``.

Exit codes: 0 success, 1 data or estimation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

from . import __version__
from .dataset import (
    PanelDataset,
    VariableSelection,
    embedded_sample,
    load_long_csv,
    load_table_csv,
    load_wide_csv,
    write_long_csv,
)
from .exceptions import PanelkitError, UsageError
from .factor import FactorSolution, analyze
from .hausman import HausmanResult, hausman
from .panel import PanelFit, extract_regional_equations, fit_panel
from .report import Cell, ReportDocument, Table, fixed3, num, prob, render
from .simulate import PanelDGP, RegressorLaw, generate

METHODS = {
    ("pooled", "none"): "Panel Least Squares",
    ("fixed", "none"): "Panel Least Squares",
    ("fixed", "cross_section"): "Panel EGLS (Cross-section weights)",
    ("random", "none"): "Panel EGLS (Cross-section random effects)",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


# -- report builders ----------------------------------------------------------


def _panel_header(dep, method, fit_or_ds):
    periods, entities = fit_or_ds.periods, fit_or_ds.entities
    return [
        ("Dependent Variable", dep),
        ("Method", method),
        ("Sample", f"{periods[0]} {periods[-1]}"),
        ("Periods included", len(periods)),
        ("Cross-sections included", len(entities)),
        ("Total panel (balanced) observations", len(periods) * len(entities)),
    ]


def _full_stats_table(st, title=None):
    return Table(title, ["", "", "", ""], [
        ["R-squared", num(st.r_squared), "Mean dependent var", num(st.mean_dep)],
        ["Adjusted R-squared", num(st.adj_r_squared), "S.D. dependent var", num(st.sd_dep)],
        ["S.E. of regression", num(st.se_regression), "Akaike info criterion", num(st.aic)],
        ["Sum squared resid", num(st.ssr), "Schwarz criterion", num(st.schwarz)],
        ["Log likelihood", num(st.log_likelihood), "Hannan-Quinn criter.", num(st.hannan_quinn)],
        ["F-statistic", num(st.f_statistic), "Durbin-Watson stat", num(st.durbin_watson)],
        ["Prob(F-statistic)", prob(st.f_prob), "", None],
    ])


def _weighted_table(st):
    return Table("Weighted Statistics", ["", "", "", ""], [
        ["R-squared", num(st.r_squared), "Mean dependent var", num(st.mean_dep)],
        ["Adjusted R-squared", num(st.adj_r_squared), "S.D. dependent var", num(st.sd_dep)],
        ["S.E. of regression", num(st.se_regression), "Sum squared resid", num(st.ssr)],
        ["F-statistic", num(st.f_statistic), "Durbin-Watson stat", num(st.durbin_watson)],
        ["Prob(F-statistic)", prob(st.f_prob), "", None],
    ])


def _unweighted_table(st):
    return Table("Unweighted Statistics", ["", "", "", ""], [
        ["R-squared", num(st.r_squared), "Mean dependent var", num(st.mean_dep)],
        ["Sum squared resid", num(st.ssr), "Durbin-Watson stat", num(st.durbin_watson)],
    ])


def _stats_dict(st):
    return None if st is None else st.as_dict()


def fit_report(pf: PanelFit) -> ReportDocument:
    header = _panel_header(pf.dependent, METHODS[(pf.model, pf.weighting)], pf)
    if pf.model == "random":
        header.append(("Swamy and Arora estimator of component variances", None))
    if pf.weighting == "cross_section":
        header.append(("Linear estimation after one-step weighting matrix", None))
    f = pf.fit
    names = [*pf.regressors, "C"]
    coef_rows = [
        [n, num(b), num(se), num(t), prob(p)]
        for n, b, se, t, p in zip(names, f.coefficients, f.std_errors, f.t_stats, f.p_values)
    ]
    sections = [Table(None, ["Variable", "Coefficient", "Std. Error", "t-Statistic", "Prob."], coef_rows)]

    if pf.model == "fixed":
        sections.append(Table("Effects Specification", [""], [], notes=["Cross-section fixed (dummy variables)"]))
    if pf.model == "random":
        c = pf.components
        sections.append(Table("Effects Specification", ["", "S.D.", "Rho"], [
            ["Cross-section random", num(c.sigma_u), Cell(c.rho_u, "prob")],
            ["Idiosyncratic random", num(c.sigma_e), Cell(c.rho_e, "prob")],
        ]))
    if pf.weighted_stats is not None:
        sections.append(_weighted_table(pf.weighted_stats))
        sections.append(_unweighted_table(pf.unweighted_stats))
    else:
        sections.append(_full_stats_table(f.stats))

    sections.append(Table("Estimation Equation", [""], [], notes=[pf.equation()]))
    results = {
        "model": pf.model,
        "weighting": pf.weighting,
        "dependent": pf.dependent,
        "regressors": list(pf.regressors),
        "coefficients": dict(zip(names, f.coefficients.tolist())),
        "std_errors": dict(zip(names, f.std_errors.tolist())),
        "t_stats": dict(zip(names, f.t_stats.tolist())),
        "p_values": dict(zip(names, f.p_values.tolist())),
        "covariance": f.covariance.tolist(),
        "stats": f.stats.as_dict(),
        "weighted_stats": _stats_dict(pf.weighted_stats),
        "unweighted_stats": _stats_dict(pf.unweighted_stats),
        "equation": pf.equation(),
    }
    if pf.components is not None:
        c = pf.components
        results["components"] = {
            "sigma_u": c.sigma_u, "sigma_e": c.sigma_e,
            "rho_u": c.rho_u, "rho_e": c.rho_e, "theta": c.theta,
        }
    if pf.effects is not None:
        results["effects"] = {
            "common_intercept": pf.effects.common_intercept,
            "entity_intercepts": pf.effects.entity_intercepts,
            "deviations": pf.effects.deviations,
        }
    if pf.model == "fixed":
        eqs = extract_regional_equations(pf)
        sections.append(Table(
            "Cross-section Effects", ["Entity", "Intercept", "Effect"],
            [[e.entity, num(e.intercept), num(pf.effects.deviations[e.entity])] for e in eqs],
            notes=["", "Regional Equations", *(e.render() for e in eqs)],
        ))
        results["regional_equations"] = [e.render() for e in eqs]
    return ReportDocument("fit", header, sections, list(pf.warnings), results)


def hausman_report(res: HausmanResult, dep: str, ds: PanelDataset) -> ReportDocument:
    header = [
        ("Correlated Random Effects - Hausman Test", None),
        ("Dependent Variable", dep),
        ("Test cross-section random effects", None),
        ("Periods included", ds.n_periods),
        ("Cross-sections included", ds.n_entities),
        ("Total panel (balanced) observations", ds.n_obs),
    ]
    summary = Table(None, ["Test Summary", "Chi-Sq. Statistic", "Chi-Sq. d.f.", "Prob."], [
        ["Cross-section random", num(res.statistic), Cell(res.df, "int"), prob(res.p_value)],
    ])
    comparisons = Table(
        "Cross-section random effects test comparisons:",
        ["Variable", "Fixed", "Random", "Var(Diff.)", "Prob."],
        [[r.name, num(r.fixed), num(r.random), num(r.var_diff), prob(r.prob)] for r in res.per_variable],
    )
    if res.indefinite_flag:
        comparisons.notes.append("Note: covariance difference is not positive definite.")
    results = {
        "statistic": res.statistic,
        "df": res.df,
        "p_value": res.p_value,
        "indefinite": res.indefinite_flag,
        "per_variable": [r.__dict__ for r in res.per_variable],
        "metadata": res.metadata,
    }
    return ReportDocument("hausman", header, [summary, comparisons], list(res.warnings), results)


def factor_report(sol: FactorSolution, suppress: float = 0.10, cutoff: float = 0.60) -> ReportDocument:
    header = [
        ("Factor Analysis", None),
        ("Extraction Method", "Principal Component Analysis"),
        ("Observations", sol.n_obs),
        ("Variables", len(sol.variables)),
        ("Components retained", sol.retained),
    ]
    m, p = sol.retained, len(sol.variables)
    b = sol.bartlett
    kmo_rows = [["Kaiser-Meyer-Olkin Measure of Sampling Adequacy.", fixed3(sol.kmo)]]
    if b is not None:
        kmo_rows += [
            ["Bartlett's Test of Sphericity  Approx. Chi-Square", fixed3(b.chi2)],
            ["                               df", Cell(b.df, "int")],
            ["                               Sig.", fixed3(b.p_value)],
        ]
    sections = [Table("KMO and Bartlett's Test", ["", ""], kmo_rows)]

    cols = ["Component", "Initial Total", "% of Variance", "Cumulative %",
            "Extraction Total", "% of Variance", "Cumulative %"]
    if sol.rotated:
        cols += ["Rotation Total", "% of Variance", "Cumulative %"]
    rows = []
    for i in range(p):
        row = [Cell(i + 1, "int"), fixed3(sol.eigenvalues[i]), fixed3(sol.pct_variance[i]),
               fixed3(sol.cumulative_pct[i])]
        if i < m:
            row += [fixed3(sol.eigenvalues[i]), fixed3(sol.pct_variance[i]), fixed3(sol.cumulative_pct[i])]
            if sol.rotated:
                row += [fixed3(sol.rotation_ssl[i]), fixed3(sol.rotation_pct[i]),
                        fixed3(sol.rotation_cumulative_pct[i])]
        rows.append(row)
    sections.append(Table("Total Variance Explained", cols, rows,
                          notes=["Extraction Method: Principal Component Analysis."]))

    sections.append(Table("Communalities", ["", "Initial", "Extraction"], [
        [v, fixed3(1.0), fixed3(h)] for v, h in zip(sol.variables, sol.communalities)
    ]))

    notes = ["Extraction Method: Principal Component Analysis."]
    if sol.rotated:
        notes.append("Rotation Method: Varimax with Kaiser Normalization.")
        if sol.rotation_converged:
            notes.append(f"a. Rotation converged in {sol.rotation_iterations} iterations.")
        else:
            notes.append(f"a. Rotation failed to converge in {sol.rotation_iterations} iterations.")
    title = "Rotated Component Matrix" + ("a" if sol.rotated else "")
    sections.append(Table(
        title, ["", *(str(j + 1) for j in range(m))],
        [[v, *(Cell(x, "loading") for x in row)] for v, row in zip(sol.variables, sol.rotated_loadings)],
        notes=notes, suppress=suppress,
    ))
    sections.append(Table(
        "Factor Summary", ["Factor", "Constituent Variables", "% of Variance"],
        [[Cell(c.factor, "int"),
          Cell(", ".join(f"{n} ({x:.3f})" for n, x in c.variables) or "-", "text"),
          Cell(f"{c.pct_variance} %", "text")] for c in sol.cards],
        notes=[f"Constituent variables load at |loading| >= {cutoff:.2f}."],
    ))
    results = {
        "variables": list(sol.variables),
        "kmo": sol.kmo,
        "bartlett": None if b is None else {"chi2": b.chi2, "df": b.df, "p_value": b.p_value},
        "eigenvalues": sol.eigenvalues,
        "pct_variance": sol.pct_variance,
        "cumulative_pct": sol.cumulative_pct,
        "retained": m,
        "loadings": sol.loadings,
        "rotated_loadings": sol.rotated_loadings,
        "communalities": sol.communalities,
        "rotation_ssl": sol.rotation_ssl,
        "rotation_iterations": sol.rotation_iterations,
        "rotation_converged": sol.rotation_converged,
        "cards": [{"factor": c.factor, "variables": [list(v) for v in c.variables],
                   "pct_variance": c.pct_variance} for c in sol.cards],
    }
    return ReportDocument("factor", header, sections, list(sol.warnings), results)


# -- argument handling --------------------------------------------------------


def _split(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _load_panel(args) -> PanelDataset:
    parts = []
    wide = args.wide or []
    if wide and len(wide) != len(args.data or []):
        raise UsageError("give one --wide variable name per --data file")
    for j, path in enumerate(args.data or []):
        if wide:
            parts.append(load_wide_csv(path, wide[j]))
        else:
            parts.append(load_long_csv(path, args.entity, args.time))
    for name in args.sample or []:
        parts.append(embedded_sample(name))
    if not parts:
        raise UsageError("no input: pass --data <path> or --sample <name>")
    ds = parts[0]
    for other in parts[1:]:
        ds = ds.merge(other)
    return ds


def _selection(args, ds) -> VariableSelection:
    sel = VariableSelection(args.dep, tuple(_split(args.regressors)))
    sel.validate(ds)
    return sel


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _capture(fn, *a, **kw):
    """Run ``fn`` turning panelkit warnings into report messages."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = fn(*a, **kw)
    return out, [str(w.message) for w in caught if issubclass(w.category, UserWarning)]


def cmd_fit(args):
    ds = _load_panel(args)
    sel = _selection(args, ds)
    weighting = args.weights.replace("-", "_")
    model = "pooled" if args.effects == "none" else args.effects
    pf, _ = _capture(fit_panel, ds, sel, model, weighting)
    doc = fit_report(pf)
    _emit(render(doc, args.format), args.out)
    return 0


def cmd_hausman(args):
    ds = _load_panel(args)
    sel = _selection(args, ds)
    res, _ = _capture(hausman, ds, sel)
    _emit(render(hausman_report(res, sel.dependent, ds), args.format), args.out)
    return 0


def _parse_retain(text):
    if text == "kaiser":
        return "kaiser"
    if text.startswith("fixed:"):
        try:
            m = int(text.split(":", 1)[1])
        except ValueError:
            m = 0
        if m >= 1:
            return m
    raise UsageError(f"--retain must be 'kaiser' or 'fixed:<m>' with m >= 1, got {text!r}")


def cmd_factor(args):
    retain = _parse_retain(args.retain)
    names, data = load_table_csv(args.data, _split(args.vars) if args.vars else None)
    if len(names) < 2:
        raise UsageError("factor analysis needs at least two numeric variables")
    sol, msgs = _capture(
        analyze, data, names, retain=retain, rotate=args.rotate == "varimax",
        kaiser_normalize=args.kaiser_normalize, cutoff=args.loading_cutoff,
    )
    doc = factor_report(sol, args.suppress, args.loading_cutoff)
    for m in msgs:
        if m not in doc.warnings:
            doc.warnings.append(m)
    _emit(render(doc, args.format), args.out)
    return 0


def cmd_simulate(args):
    beta = tuple(float(b) for b in _split(args.beta))
    laws = tuple(RegressorLaw.parse(t) for t in (args.law or []))
    scale = tuple(float(s) for s in _split(args.scale)) if args.scale else None
    dgp = PanelDGP(
        n_entities=args.entities, n_periods=args.periods, beta=beta, intercept=args.intercept,
        sigma_u=args.sigma_u, sigma_e=args.sigma_e, per_entity_scale=scale,
        regressor_law=laws, seed=args.seed,
    )
    ds, truth = generate(dgp)
    write_long_csv(ds, sys.stdout if args.out in (None, "-") else args.out)
    text = json.dumps(truth.as_dict(), indent=2) + "\n"
    if args.truth:
        with open(args.truth, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stderr.write(text)
    return 0


def _float_list_arg(text):
    try:
        [float(t) for t in _split(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="panelkit", description="Panel regressions, Hausman test and factor analysis.")
    parser.add_argument("--version", action="version", version=f"panelkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_flags(p):
        p.add_argument("--data", action="append", help="long CSV (repeatable; panels are merged)")
        p.add_argument("--sample", action="append", help="embedded sample name (repeatable)")
        p.add_argument("--wide", action="append", metavar="VARNAME",
                       help="read --data as a wide CSV holding VARNAME (one per --data)")
        p.add_argument("--entity", default="entity", help="entity column (default: entity)")
        p.add_argument("--time", default="period", help="time column (default: period)")
        p.add_argument("--dep", required=True, help="dependent variable")
        p.add_argument("--regressors", required=True, help="comma-separated regressors")
        p.add_argument("--format", choices=["text", "json"], default="text")
        p.add_argument("--out", default="-", help="output path, or - for stdout")

    p = sub.add_parser("fit", help="pooled, fixed- or random-effects regression")
    data_flags(p)
    p.add_argument("--effects", choices=["none", "fixed", "random"], default="none")
    p.add_argument("--weights", choices=["none", "cross-section"], default="none")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("hausman", help="Hausman test of fixed vs random effects")
    data_flags(p)
    p.set_defaults(func=cmd_hausman)

    p = sub.add_parser("factor", help="principal-component factor analysis")
    p.add_argument("--data", required=True, help="CSV with one row per observation")
    p.add_argument("--vars", help="comma-separated variables (default: all numeric columns)")
    p.add_argument("--retain", default="kaiser", help="kaiser or fixed:<m>")
    p.add_argument("--rotate", choices=["varimax", "none"], default="varimax")
    p.add_argument("--kaiser-normalize", dest="kaiser_normalize", action="store_true", default=True)
    p.add_argument("--no-kaiser-normalize", dest="kaiser_normalize", action="store_false")
    p.add_argument("--suppress", type=float, default=0.10, help="blank loadings below this (default 0.10)")
    p.add_argument("--loading-cutoff", type=float, default=0.60,
                   help="minimum |loading| for factor membership (default 0.60)")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_factor)

    p = sub.add_parser("simulate", help="write a synthetic panel as long CSV")
    p.add_argument("--entities", type=int, default=8)
    p.add_argument("--periods", type=int, default=12)
    p.add_argument("--beta", type=_float_list_arg, default="2,3", help="comma-separated slopes")
    p.add_argument("--intercept", type=float, default=10.0)
    p.add_argument("--sigma-u", dest="sigma_u", type=float, default=4.0)
    p.add_argument("--sigma-e", dest="sigma_e", type=float, default=1.0)
    p.add_argument("--scale", type=_float_list_arg, help="per-entity error scales, comma-separated")
    p.add_argument("--law", action="append",
                   help="regressor law uniform:a:b or gaussian:mean:sd (one, or one per slope)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.add_argument("--truth", help="write the truth record here instead of stderr")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"panelkit {args.command}: error: {exc}\n")
        return 2
    except PanelkitError as exc:
        sys.stderr.write(f"panelkit {args.command}: error: {type(exc).__name__}: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"panelkit {args.command}: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
