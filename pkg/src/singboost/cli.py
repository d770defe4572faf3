"""Command line interface: ``singboost <command> [options]``.

Commands write CSV/JSON files; ``--plot`` on ``paths``, ``measure`` and
``reject-sample`` additionally renders a PNG figure next to them. Errors go
to stderr as a single line ``singboost: error[<category>]: <message>`` and
exit with status 1 (2 for usage errors).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import losses
from .boosting import (
    BoostConfig,
    LinearModel,
    coefficient_paths,
    corr_min_report,
    fit_generic,
    fit_l2boost,
    fit_singboost,
    write_paths_csv,
    write_trace_csv,
)
from .data import SyntheticSpec, load_csv, standardize, write_simulation
from .errors import ConfigError, LossError, SingBoostError
from .estimators import SupportSet, expected_one_step, reduced_one_step
from .measures import (
    INDICATOR,
    FREQUENCY,
    ColumnMeasure,
    RowMeasure,
    column_measure_from_trace,
    implied_law,
    induced_column_measure,
    reject_init,
    reject_sample,
    singular_part,
    total_variation,
)

logger = logging.getLogger("singboost")

# used by reject-sample when no measure files are given
DEMO_NU_L = [0.6, 0.3, 0.0]
DEMO_NU_TILDE = [0.2, 0.4, 0.4]


def _write_json(obj, path):
    text = json.dumps(obj, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _stem(path):
    return os.path.splitext(str(path))[0]


def _load_model(path) -> LinearModel:
    with open(path, encoding="utf-8") as fh:
        return LinearModel.from_dict(json.load(fh))


def _add_fit_options(p):
    p.add_argument("--data", required=True, help="CSV with a header row")
    p.add_argument("--target", default="y", help="response column (default: y)")
    p.add_argument("--loss", default="l2", help='l2, l1, huber:<delta>, check:<tau> or hardrank')
    p.add_argument("--kappa", type=float, default=0.1)
    p.add_argument("--miter", type=int, default=100)
    p.add_argument("--M", type=int, default=5, help="period of singular iterations")
    p.add_argument("--sing", action="store_true", help="run SingBoost")
    p.add_argument("--ls", action="store_true", help="SingBoost with least squares candidates (default)")
    p.add_argument("--no-ls", action="store_true", help="SingBoost singular steps take a gradient step")
    p.add_argument("--seed", type=int, default=0)


def _fit_setup(args):
    loss = losses.parse_loss(args.loss)
    sing = args.sing or args.ls or args.no_ls
    if args.ls and args.no_ls:
        raise ConfigError("--ls and --no-ls are mutually exclusive")
    m = args.M if sing else min(args.M, args.miter)
    cfg = BoostConfig(
        kappa=args.kappa, m_iter=args.miter, M=m, target_loss=loss, ls_mode=not args.no_ls, seed=args.seed
    )
    if sing:
        return fit_singboost, cfg
    if loss.kind == losses.L2:
        return fit_l2boost, cfg
    if not loss.differentiable:
        raise LossError(
            f"loss {loss.kind!r} has no gradient; gradient-free fitting needs SingBoost (--sing or --ls)"
        )
    return fit_generic, cfg


def cmd_simulate(args):
    spec = SyntheticSpec(n=args.n, p=args.p, s0=args.s0, snr=args.snr, seed=args.seed)
    data_path, truth_path = write_simulation(spec, args.output)
    logger.info("wrote %s and %s", data_path, truth_path)


def cmd_fit(args):
    fitter, cfg = _fit_setup(args)
    d = load_csv(args.data, args.target)
    model = fitter(d, cfg)
    stem = _stem(args.output)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(model.to_json() + "\n")
    write_trace_csv(model.trace, stem + ".trace.csv")
    report = corr_min_report(model.trace)
    _write_json(report.to_dict(), stem + ".corrmin.json")
    if report.min_ratio is not None:
        logger.info("corr-min ratio over %d singular iterations: %.4g", len(report.ratios), report.min_ratio)


def cmd_measure(args):
    if args.model:
        model = _load_model(args.model)
        nu = column_measure_from_trace(model.trace, args.mode, model.config.target_loss.kind)
        names = list(model.standardization.column_names) or None
    else:
        if not args.data:
            raise ConfigError("measure needs --model or --data")
        fitter, cfg = _fit_setup(args)
        d = load_csv(args.data, args.target)
        nu = induced_column_measure(
            d, RowMeasure.uniform(d.n), args.b, fitter, cfg, args.seed,
            mode=args.mode, subsample_size=args.subsample, replace=args.bootstrap,
        )
        names = list(d.column_names)
    _write_json(nu.to_dict(), args.output)
    if args.plot:
        from .plotting import plot_measure

        plot_measure(nu.mass, args.plot, names, title=f"Column measure ({nu.origin_loss or 'l2'}, {nu.mode})")


def cmd_singular_parts(args):
    nu = ColumnMeasure.load(args.nu)
    nu_tilde = ColumnMeasure.load(args.nu_tilde)
    _write_json(singular_part(nu_tilde, nu).to_dict(), args.output)


def cmd_reject_sample(args):
    if (args.nu_l is None) != (args.nu_tilde is None):
        raise ConfigError("give both --nu-l and --nu-tilde, or neither")
    if args.nu_l is None:
        nu_l, nu_t = ColumnMeasure(DEMO_NU_L), ColumnMeasure(DEMO_NU_TILDE)
    else:
        nu_l, nu_t = ColumnMeasure.load(args.nu_l), ColumnMeasure.load(args.nu_tilde)
    if args.draws < 1:
        raise ConfigError("--draws must be positive")
    state = reject_init(nu_l, nu_t, args.epsilon, args.seed, shrink_active=not args.no_shrink)
    law = implied_law(state)
    draws, _ = reject_sample(state, args.draws)
    freq = np.bincount(draws, minlength=nu_l.p) / args.draws
    report = {
        "draws": args.draws,
        "seed": args.seed,
        "j_c": list(state.j_c),
        "j_s": list(state.j_s),
        "w_c": state.w_c,
        "w_s": state.w_s,
        "W_s": state.big_w_s,
        "h_bound": state.h_bound,
        "proposals": state.proposals,
        "rejections": state.rejections,
        "resets": state.resets,
        "frequencies": freq.tolist(),
        "implied_target": None if law is None else law.tolist(),
        "tv_distance": None if law is None else total_variation(freq, law),
    }
    _write_json(report, args.output)
    if args.plot:
        from .plotting import plot_measure

        plot_measure(freq, args.plot, title="Rejection sampler: empirical vs implied law", reference=law)


def cmd_paths(args):
    model = _load_model(args.model)
    path = coefficient_paths(model)
    write_paths_csv(path, args.output)
    if args.plot:
        from .plotting import plot_paths

        names = list(model.standardization.column_names) or None
        plot_paths(path, args.plot, names, title=f"Coefficient paths ({model.method})")


def cmd_expected_onestep(args):
    model = _load_model(args.model)
    d = load_csv(args.data, args.target)
    ds, st = standardize(d)
    kept = st.kept.tolist()
    if st.p != model.trace.p:
        raise ConfigError("data does not match the model's column count")
    if args.support:
        try:
            support = sorted({int(s) - 1 for s in args.support.split(",")})
        except ValueError:
            raise ConfigError(f"bad --support list {args.support!r}") from None
        if support[0] < 0 or support[-1] >= st.p:
            raise ConfigError(f"--support indices must lie in 1..{st.p}")
    else:
        support = np.flatnonzero(model.beta_std != 0).tolist()
    if not support:
        raise ConfigError("empty support: the model selected no columns; pass --support")
    missing = [j + 1 for j in support if j not in kept]
    if missing:
        raise ConfigError(f"support columns {missing} were dropped as constant")
    pos = [kept.index(j) for j in support]
    start = np.zeros(len(kept))
    start[pos] = model.beta_std[support]
    s1_kept = reduced_one_step(ds, SupportSet(tuple(pos)), start)
    s1 = np.zeros(st.p)
    s1[kept] = s1_kept
    nu = ColumnMeasure.load(args.nu) if args.nu else column_measure_from_trace(model.trace, FREQUENCY)
    theta = expected_one_step(s1, nu)
    theta_orig = np.zeros(st.p)
    theta_orig[kept] = theta[kept] / st.sds[kept]
    _write_json(
        {
            "theta": theta.tolist(),
            "theta_original": theta_orig.tolist(),
            "one_step": s1.tolist(),
            "support": support,
            "nu": nu.mass.tolist(),
        },
        args.output,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="singboost", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a Gaussian linear dataset")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=int, default=50)
    p.add_argument("--s0", type=int, default=10)
    p.add_argument("--snr", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit L2-Boosting, gradient boosting or SingBoost")
    _add_fit_options(p)
    p.add_argument("-o", "--output", default="model.json")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("measure", help="column measure from a model or from subsampled fits")
    p.add_argument("--model")
    p.add_argument("--data")
    p.add_argument("--target", default="y")
    p.add_argument("--loss", default="l2")
    p.add_argument("--kappa", type=float, default=0.1)
    p.add_argument("--miter", type=int, default=100)
    p.add_argument("--M", type=int, default=5)
    p.add_argument("--sing", action="store_true")
    p.add_argument("--ls", action="store_true")
    p.add_argument("--no-ls", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--b", type=int, default=50, help="number of subsamples")
    p.add_argument("--subsample", type=int, default=None, help="rows per subsample (default n/2)")
    p.add_argument("--bootstrap", action="store_true", help="resample n rows with replacement")
    p.add_argument("--mode", choices=[FREQUENCY, INDICATOR], default=FREQUENCY)
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--plot", metavar="PNG")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("singular-parts", help="singular part of one column measure w.r.t. another")
    p.add_argument("--nu", required=True, help="reference measure JSON")
    p.add_argument("--nu-tilde", required=True, help="target measure JSON")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_singular_parts)

    p = sub.add_parser("reject-sample", help="rejection sampling from column measures")
    p.add_argument("--nu-l", help="proposal measure JSON")
    p.add_argument("--nu-tilde", help="target measure JSON")
    p.add_argument("--draws", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-3, help="mass floor on the singular set")
    p.add_argument("--no-shrink", action="store_true", help="keep rejected columns in the active set")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--plot", metavar="PNG")
    p.set_defaults(func=cmd_reject_sample)

    p = sub.add_parser("paths", help="export coefficient paths of a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--plot", metavar="PNG")
    p.set_defaults(func=cmd_paths)

    p = sub.add_parser("expected-onestep", help="one-step estimate shrunk by a column measure")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--target", default="y")
    p.add_argument("--nu", help="column measure JSON (default: model selection frequencies)")
    p.add_argument("--support", help="1-based comma-separated columns (default: selected columns)")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_expected_onestep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        args.func(args)
    except SingBoostError as exc:
        print(f"singboost: error[{exc.category}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"singboost: error[io]: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
