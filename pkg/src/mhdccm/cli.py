"""Command-line runner: ``fit``, ``eval``, ``visualize`` and ``sweep``.

Settings come from an optional flat ``key = value`` config file (``#`` starts a
comment) and are overridden by command-line flags. Every output lands in one run
directory next to a ``manifest.txt`` listing each file with its SHA-256.

Exit codes: 0 success, 1 numerical failure, 2 usage/config/data error.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import DatasetError, SplitSpec, bundled_iris_paths, load_dataset, split
from .dccm import fit_dccm, objective_dccm
from .dnccm import fit_dnccm
from .encode_eval import FUSION_RULES, evaluate, export_projection_trace
from .model import ProjectionModel, load_model, save_model

log = logging.getLogger("mhdccm")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    x_path: str = ""
    y_path: str = ""
    label_column: str = "label"
    dataset: str = ""
    method: str = "dccm"
    L: int | None = None
    Q: int | None = None
    ridge: float | None = None
    split: str = "none"
    train_per_class: int | None = None
    train_fraction: float | None = None
    index_file: str = ""
    fusion: str = "concat"
    k: int = 1
    hamming: bool = False
    seed: int = 0
    n_jobs: int = 1
    output_dir: str = "run"

    def validate(self):
        if self.dataset == "iris":
            x, y, label = bundled_iris_paths()
            self.x_path, self.y_path, self.label_column = str(x), str(y), label
        elif self.dataset:
            raise ConfigError(f"unknown bundled dataset {self.dataset!r}")
        if not self.x_path or not self.y_path:
            raise ConfigError("x_path and y_path are required (or dataset = iris)")
        for p in (self.x_path, self.y_path):
            if not Path(p).is_file():
                raise ConfigError(f"input file not found: {p}")
        if self.method not in ("dccm", "dnccm"):
            raise ConfigError(f"method must be dccm or dnccm, got {self.method!r}")
        if self.fusion not in FUSION_RULES:
            raise ConfigError(f"fusion must be one of {FUSION_RULES}")
        if self.split not in ("none", "per_class_count", "fraction", "by_index_file"):
            raise ConfigError(f"unknown split {self.split!r}")
        for name in ("L", "Q", "k"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.ridge is not None and self.ridge < 0:
            raise ConfigError("ridge must be >= 0")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")

    def split_spec(self) -> SplitSpec | None:
        if self.split == "none":
            return None
        return SplitSpec(mode=self.split, seed=self.seed, train_per_class=self.train_per_class,
                         train_fraction=self.train_fraction, index_file=self.index_file or None)

    def canonical(self) -> str:
        return "\n".join(f"{f.name}={getattr(self, f.name)}" for f in fields(self)) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _convert(name: str, raw: str):
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    raw = raw.strip()
    if "int" in kind:
        return None if raw in ("", "none", "None") else int(raw)
    if "float" in kind:
        return None if raw in ("", "none", "None") else float(raw)
    if "bool" in kind:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(raw)
    return raw


def read_config(path) -> dict:
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _convert(key, val)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {val!r}") from None
    return out


def parse_range(text: str) -> list[int]:
    """``"1..4"`` -> [1, 2, 3, 4]; ``"1,3,5"`` -> [1, 3, 5]."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            vals = list(range(int(lo), int(hi) + 1))
        else:
            vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad range {text!r}; use e.g. 1..4 or 1,2,4") from None
    if not vals or min(vals) < 1:
        raise ConfigError(f"bad range {text!r}")
    return vals


class RunDir:
    """Output directory with overwrite protection and a SHA-256 manifest."""

    def __init__(self, path, force: bool):
        self.path = Path(path)
        self.force = force
        self.written: list[Path] = []

    def claim(self, names: list[str]):
        self.path.mkdir(parents=True, exist_ok=True)
        clash = [n for n in names if (self.path / n).exists()]
        if clash and not self.force:
            raise ConfigError(f"refusing to overwrite {', '.join(clash)} in {self.path} (use --force)")

    def file(self, name: str) -> Path:
        p = self.path / name
        self.written.append(p)
        return p

    def write_text(self, name: str, text: str) -> Path:
        p = self.file(name)
        p.write_text(text, encoding="utf-8")
        return p

    def close(self):
        manifest = self.path / "manifest.txt"
        entries = {}
        if manifest.exists():
            for line in manifest.read_text(encoding="utf-8").splitlines():
                if "  " in line:
                    digest, name = line.split("  ", 1)
                    entries[name] = digest
        for p in self.written:
            entries[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
        manifest.write_text("".join(f"{d}  {n}\n" for n, d in sorted(entries.items())),
                            encoding="utf-8")


def _data(cfg: RunConfig):
    ds = load_dataset(cfg.x_path, cfg.y_path, cfg.label_column)
    spec = cfg.split_spec()
    if spec is None:
        return ds, ds
    return split(ds, spec)


def _fit(cfg: RunConfig, train, L: int | None = None) -> ProjectionModel:
    if cfg.method == "dccm":
        return fit_dccm(train, L=L if L is not None else cfg.L, ridge=cfg.ridge)
    return fit_dnccm(train, Q=L if L is not None else cfg.Q, ridge=cfg.ridge)


def _model_trace(model: ProjectionModel, objective: float | None) -> str:
    lines = [f"method={model.method}", f"L={model.L}",
             f"ridge_x={model.ridge_x!r}", f"ridge_y={model.ridge_y!r}"]
    label = "eigenvalue" if model.method == "dccm" else "lambda"
    lines += [f"{label}_{i + 1}={float(v)!r}" for i, v in enumerate(model.eigenvalues)]
    lines += [f"residual_{i + 1}={float(v)!r}" for i, v in enumerate(model.residual_trace)]
    if objective is not None:
        lines.append(f"signed_objective={float(objective)!r}")
    return "\n".join(lines) + "\n"


def _stanza(cfg: RunConfig, command: str) -> str:
    return (f"command={command}\nversion={__version__}\nconfig_sha256={cfg.digest()}\n"
            f"seed={cfg.seed}\nnumpy={np.__version__}\n") + cfg.canonical()


def cmd_fit(cfg: RunConfig, run: RunDir):
    run.claim(["model.bin", "fit_trace.txt", "fit.log"])
    train, _ = _data(cfg)
    model = _fit(cfg, train)
    save_model(model, run.file("model.bin"))
    obj = objective_dccm(model, train) if model.method == "dccm" else None
    run.write_text("fit_trace.txt", _model_trace(model, obj))
    run.write_text("fit.log", _stanza(cfg, "fit"))
    print(f"fitted {model.method}: m={model.m} p={model.p} L={model.L} "
          f"leading eigenvalue={model.eigenvalues[0]:.6g} -> {run.path / 'model.bin'}")


def _write_report(run: RunDir, stem: str, report):
    run.write_text(f"{stem}.txt", report.to_text())
    run.write_text(f"{stem}.json", report.to_json())
    run.write_text(f"confusion{stem[len('report'):]}.csv",
                   "\n".join(",".join(str(v) for v in row) for row in report.confusion) + "\n")


def cmd_eval(cfg: RunConfig, run: RunDir, model_path, L_sweep: list[int] | None):
    model = load_model(model_path)
    stems = [f"report_L{L}" for L in L_sweep] if L_sweep else ["report"]
    run.claim([f"{s}.{ext}" for s in stems for ext in ("txt", "json")])
    train, test = _data(cfg)
    if train.x.shape[1] != model.m or train.y.shape[1] != model.p:
        raise ConfigError(
            f"dimension mismatch: data has (m={train.x.shape[1]}, p={train.y.shape[1]}), "
            f"model has (m={model.m}, p={model.p})"
        )
    for L, stem in zip(L_sweep or [None], stems):
        m = model.truncate(L) if L is not None else model
        report = evaluate(m, train, test, fusion=cfg.fusion, k=cfg.k, hamming=cfg.hamming,
                          n_jobs=cfg.n_jobs)
        _write_report(run, stem, report)
        print(f"L={m.L} accuracy={report.accuracy:.4f} ({report.n_test} test samples)")


def cmd_visualize(cfg: RunConfig, run: RunDir, model_path):
    model = load_model(model_path)
    names = ["trace_train.csv"] + (["trace_test.csv"] if cfg.split != "none" else [])
    run.claim(names)
    train, test = _data(cfg)
    export_projection_trace(model, train, run.file("trace_train.csv"))
    if cfg.split != "none":
        export_projection_trace(model, test, run.file("trace_test.csv"))
    print(f"wrote {', '.join(names)} ({train.n_samples} training rows)")


def cmd_sweep(cfg: RunConfig, run: RunDir, L_sweep: list[int]):
    names = ["sweep.csv", "fit.log"] + [f"{s}_L{L}.{e}" for L in L_sweep
                                        for s, e in (("model", "bin"), ("report", "txt"))]
    run.claim(names)
    train, test = _data(cfg)
    rows = ["L,accuracy,leading_eigenvalue"]
    for L in L_sweep:
        model = _fit(cfg, train, L)
        save_model(model, run.file(f"model_L{L}.bin"))
        report = evaluate(model, train, test, fusion=cfg.fusion, k=cfg.k, hamming=cfg.hamming,
                          n_jobs=cfg.n_jobs)
        _write_report(run, f"report_L{L}", report)
        rows.append(f"{L},{report.accuracy!r},{float(model.eigenvalues[0])!r}")
        print(f"L={L} accuracy={report.accuracy:.4f}")
    run.write_text("sweep.csv", "\n".join(rows) + "\n")
    run.write_text("fit.log", _stanza(cfg, "sweep"))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--iris", action="store_true",
                        help="use the bundled two-class Iris subset")
    for f in fields(RunConfig):
        if f.name == "dataset":
            continue
        flag = "--" + f.name.replace("_", "-")
        if f.name == "hamming":
            common.add_argument(flag, action="store_const", const="true", default=None,
                                help="k-NN on hash codes with Hamming distance")
        else:
            common.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper())
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="mhdccm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", parents=[common], help="fit a projection model")
    p = sub.add_parser("eval", parents=[common], help="evaluate a fitted model")
    p.add_argument("--model", help="model file (default OUTPUT_DIR/model.bin)")
    p.add_argument("--L-sweep", dest="L_sweep", help="evaluate column prefixes, e.g. 1..4")
    p = sub.add_parser("visualize", parents=[common], help="export projection traces")
    p.add_argument("--model", help="model file (default OUTPUT_DIR/model.bin)")
    p = sub.add_parser("sweep", parents=[common], help="refit and evaluate for several L")
    p.add_argument("--L-sweep", dest="L_sweep", required=True, help="code lengths, e.g. 1..4")
    return ap


def resolve_config(args) -> RunConfig:
    values = read_config(args.config) if args.config else {}
    for f in fields(RunConfig):
        raw = getattr(args, f.name, None)
        if raw is not None:
            try:
                values[f.name] = _convert(f.name, raw)
            except ValueError:
                raise ConfigError(f"bad value for --{f.name.replace('_', '-')}: {raw!r}") from None
    if args.iris:
        values["dataset"] = "iris"
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        run = RunDir(cfg.output_dir, args.force)
        model_path = getattr(args, "model", None) or Path(cfg.output_dir) / "model.bin"
        sweep = parse_range(args.L_sweep) if getattr(args, "L_sweep", None) else None
        if args.command == "fit":
            cmd_fit(cfg, run)
        elif args.command == "eval":
            cmd_eval(cfg, run, model_path, sweep)
        elif args.command == "visualize":
            cmd_visualize(cfg, run, model_path)
        else:
            cmd_sweep(cfg, run, sweep)
        run.close()
    except (ConfigError, DatasetError) as e:
        print(f"mhdccm {args.command}: error: {e}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as e:
        print(f"mhdccm {args.command}: numerical failure: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        # remaining ValueErrors are bad shapes/arguments reaching the library
        print(f"mhdccm {args.command}: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
