"""Command-line pipeline: gen, label, fit, eval, ablate, sweep, probe, gantt, plot.

Settings come from flags, then an optional JSON ``--config`` file, then the
defaults in :class:`RunConfig`.  The output directory defaults to
``$ROLLOUT_HH_OUT`` or ``./runs``.

Layout under the output directory::

    {J}x{M}/instances/{train,test}/<id>.json
    {J}x{M}/dataset-{regret,normalized}.csv
    {J}x{M}/ledger.json
    {J}x{M}/model-{regret,normalized}.knn
    {J}x{M}/report-main.{csv,json}
    {J}x{M}/report-ablation.{csv,json}
    {J}x{M}/sweep.{csv,json}
    probe-{train}-to-{test}.{csv,json}
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from . import svg
from .benchmark import SCALES, make_split, parse_scale, scale_str
from .core import ContractError, load_instance, save_instance, verify_feasible
from .evaluation import (ablation_grid, evaluate, generalization_probe, main_methods, pareto_sweep)
from .io import atomic_write_text
from .knn import fit, load_model, save_model
from .labeling import (LabelConfig, LabelKind, build_dataset, load_dataset, parse_budget,
                       relabel, save_dataset, save_ledger)
from .policies import parse_policy, run_policy
from .rules import best_fixed_rule

log = logging.getLogger("rollout_hh")

ENV_OUT = "ROLLOUT_HH_OUT"


@dataclass
class RunConfig:
    # None means every scale for gen/label/fit/eval and 10x10 for ablate/sweep
    scales: list[str] | None = None
    train_count: int = 150
    test_count: int = 40
    seed: int = 0
    states_per_instance: int = 25
    trajectories_per_instance: int = 3
    depth: str = "full"
    breadth: str = "full"
    label_kind: str = "both"
    include_default: bool = True
    k: int = 7
    epsilon: float = 1e-8
    lam: float = 1.0
    lambdas: list[float] = field(default_factory=lambda: [0.5, 1.0, 2.0])
    policies: list[str] = field(default_factory=list)
    sweep_train_count: int = 48
    sweep_depths: list[str] = field(default_factory=lambda: ["full", "1", "3", "5", "10"])
    sweep_breadths: list[str] = field(default_factory=lambda: ["full", "3", "5"])
    probe_train: str = "10x10"
    probe_test: str = "15x10"
    output_dir: str = ""
    threads: int = 1

    def validate(self) -> None:
        for name in ("train_count", "test_count", "states_per_instance", "trajectories_per_instance",
                     "k", "sweep_train_count", "threads"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be >= 1")
        for s in self.scales or []:
            parse_scale(s)
        parse_budget(self.depth)
        parse_budget(self.breadth)
        if self.label_kind not in ("both", "regret", "normalized"):
            raise ContractError(f"unknown label kind {self.label_kind!r}")

    def echo(self) -> dict:
        """Provenance echo; excludes settings that must not change outputs."""
        d = asdict(self)
        d.pop("threads")
        d.pop("output_dir")
        return d

    def scale_list(self, study: bool = False) -> list[str]:
        if self.scales:
            return list(self.scales)
        return ["10x10"] if study else [scale_str(s) for s in SCALES]

    @property
    def out(self) -> Path:
        return Path(self.output_dir or os.environ.get(ENV_OUT) or "runs")

    def scale_dir(self, scale: str) -> Path:
        return self.out / scale_str(parse_scale(scale))

    def label_config(self, default_rule) -> LabelConfig:
        return LabelConfig(self.states_per_instance, self.trajectories_per_instance,
                           parse_budget(self.depth), parse_budget(self.breadth), LabelKind.REGRET,
                           default_rule, self.seed, self.include_default)


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    if args.config:
        data = json.loads(Path(args.config).read_text())
        unknown = set(data) - known
        if unknown:
            raise ContractError(f"unknown config keys: {sorted(unknown)}")
        for key, value in data.items():
            setattr(cfg, key, value)
    for key in known:
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


# -- instance storage ----------------------------------------------------------------

def instance_dir(cfg: RunConfig, scale: str, split: str) -> Path:
    return cfg.scale_dir(scale) / "instances" / split


def read_split(cfg: RunConfig, scale: str, split: str, count: int | None = None):
    d = instance_dir(cfg, scale, split)
    files = sorted(d.glob("*.json"))
    if not files:
        raise FileNotFoundError(f"no {split} instances under {d}; run `gen` first")
    if count is not None:
        files = files[:count]
    return [load_instance(f) for f in files]


# -- subcommands ----------------------------------------------------------------------

def cmd_gen(cfg: RunConfig) -> None:
    for scale in cfg.scale_list():
        for split, count in (("train", cfg.train_count), ("test", cfg.test_count)):
            # drop files from an earlier, larger run so the split is exactly `count`
            for old in instance_dir(cfg, scale, split).glob(f"{scale_str(parse_scale(scale))}-{split}-*.json"):
                old.unlink()
            for inst in make_split(scale, count, split, cfg.seed):
                save_instance(inst, instance_dir(cfg, scale, split) / f"{inst.id}.json")
        log.info("wrote %d+%d instances for %s", cfg.train_count, cfg.test_count, scale)


def cmd_label(cfg: RunConfig) -> None:
    for scale in cfg.scale_list():
        train = read_split(cfg, scale, "train")
        h0 = best_fixed_rule(train)
        lcfg = cfg.label_config(h0)
        data, ledger = build_dataset(train, lcfg, cfg.threads)
        d = cfg.scale_dir(scale)
        kinds = ["regret", "normalized"] if cfg.label_kind == "both" else [cfg.label_kind]
        for kind in kinds:
            kcfg = replace(lcfg, label_kind=LabelKind(kind))
            save_dataset(d / f"dataset-{kind}.csv", relabel(data, kind), kcfg, cfg.echo())
        save_ledger(d / "ledger.json", ledger, lcfg, cfg.echo())
        log.info("%s: default rule %s, %d samples, %d rollouts, %d steps, %.2fs",
                 scale, h0.name, len(data), ledger.rollouts, ledger.steps, ledger.wall_seconds)


def _dataset_kinds(cfg: RunConfig) -> list[str]:
    return ["regret", "normalized"] if cfg.label_kind == "both" else [cfg.label_kind]


def cmd_fit(cfg: RunConfig) -> None:
    for scale in cfg.scale_list():
        d = cfg.scale_dir(scale)
        for kind in _dataset_kinds(cfg):
            path = d / f"dataset-{kind}.csv"
            if not path.exists():
                raise FileNotFoundError(f"{path} missing; run `label` first")
            data, header = load_dataset(path)
            h0 = header["label_config"]["default_rule"]
            model = fit(data, cfg.k, cfg.epsilon, h0, kind)
            save_model(d / f"model-{kind}.knn", model, cfg.echo())
            log.info("%s: fitted %s model on %d samples", scale, kind, len(data))


def _load_models(cfg: RunConfig, scale: str) -> dict[LabelKind, object]:
    d = cfg.scale_dir(scale)
    out = {}
    for kind in LabelKind:
        path = d / f"model-{kind.value}.knn"
        if not path.exists():
            raise FileNotFoundError(f"{path} missing; run `fit` first")
        out[kind] = load_model(path)
    return out


def cmd_eval(cfg: RunConfig) -> None:
    for scale in cfg.scale_list():
        test = read_split(cfg, scale, "test")
        if cfg.policies:
            model = None
            path = cfg.scale_dir(scale) / "model-regret.knn"
            if path.exists():
                model = load_model(path)
            methods = [(spec, parse_policy(spec, model)) for spec in cfg.policies]
        else:
            models = _load_models(cfg, scale)
            methods = main_methods(models[LabelKind.REGRET], models[LabelKind.NORMALIZED], cfg.lam)
        report = evaluate(methods, test, cfg.seed, cfg.threads,
                          metadata={"scale": scale, "config": cfg.echo()})
        report.save(cfg.scale_dir(scale) / "report-main")
        print(f"== {scale} ==\n{report.table()}")


def cmd_ablate(cfg: RunConfig) -> None:
    for scale in cfg.scale_list(study=True):
        test = read_split(cfg, scale, "test")
        report = ablation_grid(_load_models(cfg, scale), test, cfg.lambdas, cfg.seed, cfg.threads,
                               metadata={"scale": scale, "config": cfg.echo()})
        report.save(cfg.scale_dir(scale) / "report-ablation")
        print(f"== {scale} ablation ==\n{report.table()}")


def cmd_sweep(cfg: RunConfig) -> None:
    for scale in cfg.scale_list(study=True):
        train = read_split(cfg, scale, "train", cfg.sweep_train_count)
        test = read_split(cfg, scale, "test")
        base = cfg.label_config(best_fixed_rule(train))
        result = pareto_sweep(train, test, [parse_budget(x) for x in cfg.sweep_depths],
                              [parse_budget(x) for x in cfg.sweep_breadths], base, cfg.lam, cfg.k,
                              cfg.epsilon, cfg.seed, cfg.threads,
                              metadata={"scale": scale, "config": cfg.echo()})
        result.save(cfg.scale_dir(scale) / "sweep")
        print(f"== {scale} sweep ==\n{result.table()}")


def cmd_probe(cfg: RunConfig) -> None:
    model = load_model(cfg.scale_dir(cfg.probe_train) / "model-regret.knn")
    tscale = parse_scale(cfg.probe_test)
    tdir = instance_dir(cfg, cfg.probe_test, "test")
    if any(tdir.glob("*.json")):
        test = read_split(cfg, cfg.probe_test, "test")
    else:
        test = make_split(tscale, cfg.test_count, "test", cfg.seed)
    report = generalization_probe(model, test, cfg.lam, cfg.seed, cfg.threads,
                                  metadata={"train_scale": cfg.probe_train, "test_scale": cfg.probe_test,
                                            "config": cfg.echo()})
    stem = cfg.out / f"probe-{scale_str(parse_scale(cfg.probe_train))}-to-{scale_str(tscale)}"
    report.save(stem)
    print(f"== probe {cfg.probe_train} -> {cfg.probe_test} ==\n{report.table()}")


def cmd_gantt(cfg: RunConfig, instance_path: str, policy_spec: str, model_path: str | None,
              output: str | None) -> Path:
    inst = load_instance(instance_path)
    model = load_model(model_path) if model_path else None
    policy = parse_policy(policy_spec, model)
    makespan, state = run_policy(policy, inst, cfg.seed)
    check = verify_feasible(state)
    if not check:
        raise AssertionError(f"infeasible schedule: {check.reason}")
    out = Path(output) if output else cfg.out / f"gantt-{inst.id}-{policy_spec.replace(':', '_')}.svg"
    atomic_write_text(out, svg.gantt_svg(state, f"{inst.id} / {policy_spec}"))
    print(f"{out}: makespan {makespan}")
    return out


def cmd_plot(cfg: RunConfig, reports: list[str], output_dir: str | None) -> list[Path]:
    written = []
    for path in reports:
        p = Path(path)
        doc = json.loads(p.read_text())
        fmt = doc.get("format")
        if fmt == "rollout_hh.report":
            rows = [r for r in doc["rows"] if r["method"] != "Oracle-Fixed"]
            text = svg.bar_chart_svg([r["method"] for r in rows], [r["mean_rpd"] for r in rows],
                                     "mean RPD (%)", p.stem)
        elif fmt == "rollout_hh.sweep":
            rows = doc["rows"]
            text = svg.scatter_svg([r["guided_steps"] for r in rows], [r["mean_rpd"] for r in rows],
                                   [f"d={r['depth']},b={r['breadth']}" for r in rows],
                                   "label cost (candidate-guided rollout steps)", "test mean RPD (%)",
                                   p.stem)
        else:
            raise ContractError(f"{p}: unrecognized report format {fmt!r}")
        out = Path(output_dir or p.parent) / f"{p.stem}.svg"
        atomic_write_text(out, text)
        written.append(out)
        print(out)
    return written


# -- argument parsing ---------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", dest="output_dir", help=f"output directory (default ${ENV_OUT} or ./runs)")
    common.add_argument("--seed", type=int)
    common.add_argument("--scale", dest="scales", action="append", help="JxM, repeatable")
    common.add_argument("--train-count", type=int)
    common.add_argument("--test-count", type=int)
    common.add_argument("--states", dest="states_per_instance", type=int)
    common.add_argument("--trajectories", dest="trajectories_per_instance", type=int)
    common.add_argument("--depth", help="rollout depth or 'full'")
    common.add_argument("--breadth", help="rollout breadth 1..7 or 'full'")
    common.add_argument("--label-kind", choices=["both", "regret", "normalized"])
    common.add_argument("--pure-uniform-breadth", dest="include_default", action="store_const", const=False,
                        help="do not force the default rule into breadth subsets")
    common.add_argument("--k", type=int)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--lam", type=float, help="gate / LCB lambda")
    common.add_argument("--lambdas", type=float, nargs="+")
    common.add_argument("--policy", dest="policies", action="append", help="policy spec, repeatable")
    common.add_argument("--sweep-train-count", type=int)
    common.add_argument("--sweep-depths", nargs="+")
    common.add_argument("--sweep-breadths", nargs="+")
    common.add_argument("--probe-train")
    common.add_argument("--probe-test")
    common.add_argument("--threads", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rollout-hh", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("gen", "label", "fit", "eval", "ablate", "sweep", "probe"):
        sub.add_parser(name, parents=[common])
    g = sub.add_parser("gantt", parents=[common])
    g.add_argument("instance")
    g.add_argument("--policy-spec", default="fixed:FIFO")
    g.add_argument("--model")
    g.add_argument("-o", "--output")
    p = sub.add_parser("plot", parents=[common])
    p.add_argument("reports", nargs="+", help="report or sweep JSON files")
    p.add_argument("-o", "--plot-dir", help="where to write the SVGs (default: next to each report)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
        if args.command == "gantt":
            cmd_gantt(cfg, args.instance, args.policy_spec, args.model, args.output)
        elif args.command == "plot":
            cmd_plot(cfg, args.reports, args.plot_dir)
        else:
            globals()[f"cmd_{args.command}"](cfg)
    except (ContractError, ValueError, FileNotFoundError, KeyError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
