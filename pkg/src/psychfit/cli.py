"""Batch command-line entry point.

Subcommands: ctt, assume, fit, compare, itemfit, reliability, regress,
simulate, forms, report (full pipeline). All outputs are stable-named
flat files; CSV floats carry 6 significant digits, JSON full precision.

Exit codes: 0 = ran and all criteria pass; 10 = ran with criterion
failures; >= 20 = execution error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ctt as ctt_mod
from . import dimensionality as dim_mod
from . import fitstats, plots, regression, reliability, simulate
from .errors import NoModels, PsychfitError
from .ingest import ItemBank, parse_response_csv, parse_score_csv
from .irt import EmConfig, ItemParams, eap_scores, fit_mml

_MODEL_ORDER = ("rasch", "2pl", "3pl")

EXIT_OK = 0
EXIT_CRITERIA_FAILED = 10
EXIT_ERROR = 20


@dataclass(frozen=True)
class PipelineConfig:
    responses: str
    out_dir: str
    models: tuple[str, ...] = ("rasch", "2pl", "3pl")
    scores: str | None = None
    dv: str | None = None
    ivs: tuple[str, ...] = ()
    discrimination_threshold: float = 0.3
    discrimination_variant: str = "point_biserial"
    apply_item_filter: bool = False
    q3_threshold: float = 0.2
    reliability_threshold: float = 0.7
    seed: int = 0
    em: EmConfig = field(default_factory=EmConfig)


def _fmt6(v) -> str:
    if v is None or (isinstance(v, float) and not np.isfinite(v)):
        return ""
    return f"{v:.6g}"


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _sorted_models(models):
    models = [m.lower() for m in models]
    for m in models:
        if m not in _MODEL_ORDER:
            raise ValueError(f"unknown model {m!r}")
    return tuple(sorted(set(models), key=_MODEL_ORDER.index))


def _ctt_section(m, config: PipelineConfig):
    stats = ctt_mod.item_stats(m)
    sel = ctt_mod.select_items(stats, config.discrimination_threshold,
                               config.discrimination_variant)
    return stats, sel


def _itemstats_csv(stats, sel) -> str:
    retained = set(sel.retained)
    lines = ["item_id,difficulty,pbis,upper_lower,retained"]
    for s in stats:
        lines.append(",".join([
            s.item_id,
            _fmt6(s.difficulty),
            _fmt6(s.disc_point_biserial),
            _fmt6(s.disc_upper_lower),
            "1" if s.item_id in retained else "0",
        ]))
    return "\n".join(lines) + "\n"


def _selection_json(sel) -> dict:
    return {
        "retained": list(sel.retained),
        "excluded": list(sel.excluded),
        "threshold": sel.threshold,
        "variant": sel.variant,
    }


def _fit_json(fit) -> dict:
    return {
        "model": fit.kind,
        "loglik": fit.loglik,
        "k": fit.n_params,
        "n": fit.n_obs,
        "converged": fit.converged,
        "n_iters": fit.n_iters,
        "prior_sd": fit.prior_sd,
        "items": [
            {"id": iid, "a": p.a, "b": p.b, "c": p.c}
            for iid, p in zip(fit.item_ids, fit.items)
        ],
    }


def _fit_report_json(rep) -> dict:
    return {
        "m2": rep.m2, "df": rep.df, "p": rep.p, "rmsea": rep.rmsea,
        "srmsr": rep.srmsr, "tli": rep.tli, "cfi": rep.cfi,
        "aic": rep.aic, "bic": rep.bic, "suppressed": rep.suppressed,
        "thresholds": rep.thresholds,
    }


def _assumptions_json(sol, q3rep) -> dict:
    return {
        "chi2": sol.chi2,
        "df": sol.df,
        "chi2_over_df": sol.chi2_over_df,
        "rmsea": sol.rmsea,
        "rmsea_ci90": list(sol.rmsea_ci90),
        "srmsr": sol.srmsr,
        "heywood": sol.heywood,
        "criteria_pass": sol.criteria,
        "q3_threshold": q3rep.threshold,
        "q3_max": q3rep.max_abs,
        "q3_theta_estimator": q3rep.theta_estimator,
        "q3_flagged_pairs": [
            {"item_a": a, "item_b": b, "q3": v} for a, b, v in q3rep.flagged
        ],
    }


def select_model(fits_in_order, lrts) -> str:
    """Prefer the more complex model only when its LRT p-value is < 0.05."""
    selected = fits_in_order[0].kind
    for pair, res in zip(zip(fits_in_order, fits_in_order[1:]), lrts):
        if res.p < 0.05:
            selected = pair[1].kind
        else:
            break
    return selected


def run_pipeline(config: PipelineConfig) -> dict:
    """Execute the full validation pipeline; returns the report dict."""
    if not config.models:
        raise NoModels("empty model list")
    models = _sorted_models(config.models)
    out = Path(config.out_dir)
    m = parse_response_csv(config.responses)

    stats, sel = _ctt_section(m, config)
    _write(out / "itemstats.csv", _itemstats_csv(stats, sel))
    _write(out / "selection.json", _json(_selection_json(sel)))
    if config.apply_item_filter:
        m = m.select_items(list(sel.retained))

    tet = dim_mod.tetrachoric_matrix(m)
    sol = dim_mod.single_factor_fit(tet.rho, m.n, exclude=tet.boundary)

    fits = {kind: fit_mml(m, kind, config.em) for kind in models}
    fits_in_order = [fits[k] for k in models]
    reports = {kind: fitstats.m2_family(fits[kind], m) for kind in models}
    lrts = [fitstats.lrt(a, b) for a, b in zip(fits_in_order, fits_in_order[1:])]
    selected = select_model(fits_in_order, lrts) if lrts else models[0]
    sel_fit = fits[selected]

    thetas = eap_scores(m, sel_fit)[:, 0]
    q3rep = dim_mod.q3(m, sel_fit, thetas, config.q3_threshold)
    _write(out / "assumptions.json", _json(_assumptions_json(sol, q3rep)))

    for kind in models:
        _write(out / f"fit_{kind}.json", _json(_fit_json(fits[kind])))
        _write(out / f"icc_{kind}.svg", plots.icc_grid_svg(fits[kind]))

    compare = {
        "models": {kind: _fit_report_json(reports[kind]) for kind in models},
        "lrt": [
            {
                "restricted": a.kind, "unrestricted": b.kind,
                "chi2": res.chi2, "df": res.df, "p": res.p,
                "negative_chi2": res.negative_chi2,
            }
            for (a, b), res in zip(zip(fits_in_order, fits_in_order[1:]), lrts)
        ],
        "selected_model": selected,
    }
    _write(out / "compare.json", _json(compare))

    itemfit_rows = {kind: fitstats.s_chi2(fits[kind], m) for kind in models}
    lines = ["model,item_id,s_chi2,df,p,p_adjusted"]
    for kind in models:
        for row in itemfit_rows[kind]:
            lines.append(",".join([
                kind, row.item_id, _fmt6(row.s_chi2), str(row.df),
                _fmt6(row.p), _fmt6(row.p_adjusted),
            ]))
    _write(out / "itemfit.csv", "\n".join(lines) + "\n")

    rel = reliability.reliability_report(m, sol, sel_fit,
                                         threshold=config.reliability_threshold)
    rel_json = {
        "alpha": rel.alpha,
        "omega_total": rel.omega_total,
        "omega_source": rel.omega_source,
        "tif_peak_theta": rel.tif_peak_theta,
        "tif_peak_value": rel.tif_peak_value,
        "se_at_peak": rel.se_at_peak,
        "threshold": rel.threshold,
        "alpha_acceptable": rel.alpha_acceptable,
        "omega_acceptable": rel.omega_acceptable,
    }
    _write(out / "reliability.json", _json(rel_json))
    _write(out / "tif.svg", plots.tif_svg(rel.theta_grid, rel.information, rel.se,
                                          rel.tif_peak_theta, rel.tif_peak_value))

    regression_section = None
    if config.scores and config.dv:
        table = parse_score_csv(config.scores)
        ivs = config.ivs or tuple(k for k in table.columns if k != config.dv)
        res = regression.ols(table[config.dv], {k: table[k] for k in ivs})
        diag = regression.diagnostics(res, {k: table[k] for k in ivs})
        regression_section = _regression_json(res, diag)
        _write(out / "regression.json", _json(regression_section))
        _write(out / "pred_vs_obs.svg", plots.pred_vs_obs_svg(res.fitted, res.y))

    criteria = dict(sol.criteria)
    criteria["q3_no_flagged_pairs"] = len(q3rep.flagged) == 0
    criteria["alpha_ge_threshold"] = rel.alpha_acceptable
    criteria["omega_ge_threshold"] = rel.omega_acceptable
    sel_rep = reports[selected]
    criteria.update({f"selected_{k}": v for k, v in sel_rep.thresholds.items()})

    report = {
        "config": {
            "responses": str(config.responses),
            "models": list(models),
            "discrimination_threshold": config.discrimination_threshold,
            "discrimination_variant": config.discrimination_variant,
            "apply_item_filter": config.apply_item_filter,
            "q3_threshold": config.q3_threshold,
            "reliability_threshold": config.reliability_threshold,
            "seed": config.seed,
        },
        "n_examinees": m.n,
        "n_items": m.j,
        "ctt": {"selection": _selection_json(sel)},
        "assumptions": _assumptions_json(sol, q3rep),
        "fit_reports": {kind: _fit_report_json(reports[kind]) for kind in models},
        "lrt": compare["lrt"],
        "selected_model": selected,
        "reliability": rel_json,
        "regression": regression_section,
        "criteria_pass": criteria,
        "all_criteria_pass": all(criteria.values()),
    }
    _write(out / "report.json", _json(report))
    return report


def _regression_json(res, diag) -> dict:
    return {
        "coefficients": [
            {"name": name, "beta": float(b), "se": float(se), "t": float(t), "p": float(p)}
            for name, b, se, t, p in zip(res.names, res.coef, res.se, res.t, res.p)
        ],
        "f": res.f_stat,
        "f_df": list(res.f_df),
        "f_p": res.f_p,
        "r2": res.r2,
        "adj_r2": res.adj_r2,
        "standardized": res.standardized,
        "diagnostics": {
            "shapiro_wilk": {"w": diag.shapiro_w, "p": diag.shapiro_p},
            "breusch_pagan": {"lm": diag.bp_lm, "df": diag.bp_df, "p": diag.bp_p},
            "durbin_watson": {"d": diag.dw, "annotation": diag.dw_annotation},
        },
    }


def export_forms(bank: ItemBank, n_forms: int, seed: int, out_dir) -> list[Path]:
    """Write randomized test forms: item order and option orders permuted,
    key indices remapped, one answer-key sidecar per form."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for form_ix in range(n_forms):
        rng = np.random.Generator(
            np.random.Philox(key=np.array([seed, form_ix], dtype=np.uint64))
        )
        order = rng.permutation(len(bank.items))
        form_items = []
        key_map = {}
        for pos, item_ix in enumerate(order):
            item = bank.items[int(item_ix)]
            opt_order = rng.permutation(len(item.options))
            options = [item.options[int(o)] for o in opt_order]
            key_index = options.index(item.key)
            form_items.append({
                "position": pos + 1,
                "id": item.item_id,
                "dimension": item.dimension,
                "stem": item.stem,
                "options": options,
            })
            key_map[item.item_id] = {"key": item.key, "key_index": key_index}
        form_path = out / f"form_{form_ix + 1}.json"
        key_path = out / f"form_{form_ix + 1}_key.json"
        _write(form_path, _json({"form": form_ix + 1, "seed": seed, "items": form_items}))
        _write(key_path, _json({"form": form_ix + 1, "keys": key_map}))
        written.extend([form_path, key_path])
    return written


def _add_common(p):
    p.add_argument("--out", default="psychfit_out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="psychfit",
                                 description="Instrument validation pipeline")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ctt", help="item difficulty/discrimination and selection")
    p.add_argument("responses")
    p.add_argument("--threshold", type=float, default=0.3)
    p.add_argument("--variant", choices=("point_biserial", "upper_lower"),
                   default="point_biserial")
    _add_common(p)

    p = sub.add_parser("assume", help="unidimensionality and local independence")
    p.add_argument("responses")
    p.add_argument("--model", choices=_MODEL_ORDER, default="2pl")
    p.add_argument("--q3-threshold", type=float, default=0.2)
    _add_common(p)

    p = sub.add_parser("fit", help="fit one IRT model")
    p.add_argument("responses")
    p.add_argument("--model", choices=_MODEL_ORDER, required=True)
    _add_common(p)

    p = sub.add_parser("icc", help="emit per-model ICC plots")
    p.add_argument("responses")
    p.add_argument("--model", choices=_MODEL_ORDER, default="2pl")
    _add_common(p)

    p = sub.add_parser("compare", help="model comparison (LRT, fit indices)")
    p.add_argument("responses")
    p.add_argument("--models", default="rasch,2pl,3pl")
    _add_common(p)

    p = sub.add_parser("itemfit", help="S-chi2 item fit with BH adjustment")
    p.add_argument("responses")
    p.add_argument("--models", default="rasch,2pl,3pl")
    _add_common(p)

    p = sub.add_parser("reliability", help="alpha, omega total, information")
    p.add_argument("responses")
    p.add_argument("--model", choices=_MODEL_ORDER, default="2pl")
    _add_common(p)

    p = sub.add_parser("regress", help="standardized OLS with diagnostics")
    p.add_argument("scores")
    p.add_argument("--dv", required=True)
    p.add_argument("--ivs", required=True, help="comma-separated predictor names")
    p.add_argument("--no-standardize-dv", action="store_true")
    _add_common(p)

    p = sub.add_parser("simulate", help="write seeded synthetic responses")
    p.add_argument("--spec", required=True, help="JSON spec with items/n")
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("forms", help="export randomized test forms")
    p.add_argument("bank")
    p.add_argument("--n-forms", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("report", help="full validation pipeline")
    p.add_argument("responses")
    p.add_argument("--models", default="rasch,2pl,3pl")
    p.add_argument("--scores")
    p.add_argument("--dv")
    p.add_argument("--ivs")
    p.add_argument("--apply-item-filter", action="store_true")
    p.add_argument("--threshold", type=float, default=0.3)
    p.add_argument("--q3-threshold", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    return ap


def _cmd_simulate(args) -> int:
    with open(args.spec, encoding="utf-8") as f:
        spec_json = json.load(f)
    items = tuple(
        ItemParams(float(i["a"]), float(i["b"]), float(i.get("c", 0.0)))
        for i in spec_json["items"]
    )
    spec = simulate.SimSpec(
        items=items,
        n=int(spec_json["n"]),
        latent_mean=float(spec_json.get("latent_mean", 0.0)),
        latent_sd=float(spec_json.get("latent_sd", 1.0)),
        seed=args.seed,
    )
    m, thetas = simulate.simulate_responses(spec)
    out = Path(args.out)
    _write(out / "responses.csv", m.to_csv())
    truth = {
        "seed": args.seed,
        "thetas": thetas.tolist(),
        "items": [{"id": iid, "a": p.a, "b": p.b, "c": p.c}
                  for iid, p in zip(m.item_ids, items)],
    }
    _write(out / "truth.json", _json(truth))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(getattr(args, "out", "psychfit_out"))
    try:
        if args.command == "report":
            config = PipelineConfig(
                responses=args.responses,
                out_dir=args.out,
                models=tuple(args.models.split(",")),
                scores=args.scores,
                dv=args.dv,
                ivs=tuple(args.ivs.split(",")) if args.ivs else (),
                discrimination_threshold=args.threshold,
                apply_item_filter=args.apply_item_filter,
                q3_threshold=args.q3_threshold,
                seed=args.seed,
            )
            report = run_pipeline(config)
            return EXIT_OK if report["all_criteria_pass"] else EXIT_CRITERIA_FAILED

        if args.command == "ctt":
            m = parse_response_csv(args.responses)
            stats = ctt_mod.item_stats(m)
            sel = ctt_mod.select_items(stats, args.threshold, args.variant)
            _write(out / "itemstats.csv", _itemstats_csv(stats, sel))
            _write(out / "selection.json", _json(_selection_json(sel)))
            return EXIT_OK

        if args.command == "assume":
            m = parse_response_csv(args.responses)
            tet = dim_mod.tetrachoric_matrix(m)
            sol = dim_mod.single_factor_fit(tet.rho, m.n, exclude=tet.boundary)
            fit = fit_mml(m, args.model)
            thetas = eap_scores(m, fit)[:, 0]
            q3rep = dim_mod.q3(m, fit, thetas, args.q3_threshold)
            _write(out / "assumptions.json", _json(_assumptions_json(sol, q3rep)))
            ok = all(sol.criteria.values()) and not q3rep.flagged
            return EXIT_OK if ok else EXIT_CRITERIA_FAILED

        if args.command == "fit":
            m = parse_response_csv(args.responses)
            fit = fit_mml(m, args.model)
            _write(out / "fit.json", _json(_fit_json(fit)))
            return EXIT_OK

        if args.command == "icc":
            m = parse_response_csv(args.responses)
            fit = fit_mml(m, args.model)
            _write(out / f"icc_{args.model}.svg", plots.icc_grid_svg(fit))
            return EXIT_OK

        if args.command in ("compare", "itemfit"):
            m = parse_response_csv(args.responses)
            models = _sorted_models(args.models.split(","))
            fits = [fit_mml(m, kind) for kind in models]
            if args.command == "compare":
                reports = {f.kind: fitstats.m2_family(f, m) for f in fits}
                lrts = [fitstats.lrt(a, b) for a, b in zip(fits, fits[1:])]
                selected = select_model(fits, lrts) if lrts else models[0]
                compare = {
                    "models": {k: _fit_report_json(v) for k, v in reports.items()},
                    "lrt": [
                        {"restricted": a.kind, "unrestricted": b.kind,
                         "chi2": r.chi2, "df": r.df, "p": r.p,
                         "negative_chi2": r.negative_chi2}
                        for (a, b), r in zip(zip(fits, fits[1:]), lrts)
                    ],
                    "selected_model": selected,
                }
                _write(out / "compare.json", _json(compare))
            else:
                lines = ["model,item_id,s_chi2,df,p,p_adjusted"]
                for f in fits:
                    for row in fitstats.s_chi2(f, m):
                        lines.append(",".join([
                            f.kind, row.item_id, _fmt6(row.s_chi2), str(row.df),
                            _fmt6(row.p), _fmt6(row.p_adjusted),
                        ]))
                _write(out / "itemfit.csv", "\n".join(lines) + "\n")
            return EXIT_OK

        if args.command == "reliability":
            m = parse_response_csv(args.responses)
            tet = dim_mod.tetrachoric_matrix(m)
            sol = dim_mod.single_factor_fit(tet.rho, m.n, exclude=tet.boundary)
            fit = fit_mml(m, args.model)
            rel = reliability.reliability_report(m, sol, fit)
            _write(out / "reliability.json", _json({
                "alpha": rel.alpha, "omega_total": rel.omega_total,
                "omega_source": rel.omega_source,
                "tif_peak_theta": rel.tif_peak_theta,
                "tif_peak_value": rel.tif_peak_value,
                "se_at_peak": rel.se_at_peak,
                "threshold": rel.threshold,
                "alpha_acceptable": rel.alpha_acceptable,
                "omega_acceptable": rel.omega_acceptable,
            }))
            _write(out / "tif.svg", plots.tif_svg(rel.theta_grid, rel.information,
                                                  rel.se, rel.tif_peak_theta,
                                                  rel.tif_peak_value))
            ok = rel.alpha_acceptable and rel.omega_acceptable
            return EXIT_OK if ok else EXIT_CRITERIA_FAILED

        if args.command == "regress":
            table = parse_score_csv(args.scores)
            ivs = tuple(args.ivs.split(","))
            res = regression.ols(table[args.dv], {k: table[k] for k in ivs},
                                 standardize_dv=not args.no_standardize_dv)
            diag = regression.diagnostics(res, {k: table[k] for k in ivs})
            _write(out / "regression.json", _json(_regression_json(res, diag)))
            _write(out / "pred_vs_obs.svg", plots.pred_vs_obs_svg(res.fitted, res.y))
            return EXIT_OK

        if args.command == "simulate":
            return _cmd_simulate(args)

        if args.command == "forms":
            bank = ItemBank.from_json(args.bank)
            export_forms(bank, args.n_forms, args.seed, args.out)
            return EXIT_OK

        raise AssertionError(f"unhandled command {args.command}")
    except PsychfitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR + 1


if __name__ == "__main__":
    sys.exit(main())
