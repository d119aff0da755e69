#!/usr/bin/env python3
"""
UFCNN工具箱主程序入口

功能：
- gen-tracking：生成纯方位角跟踪数据集
- synth-quotes / label-trades：合成报价、求最优动作标签
- train / eval：训练与评估（检查点 + 指标历史）
- gradcheck：有限差分梯度检验
- backtest：model / viterbi / uniform 三种策略收益对比
- ablation：层数 × 滤波器数 消融表

退出码：0 成功，1 用法或配置错误，2 数据错误，3 训练发散，4 梯度检验未通过
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

# 添加项目根目录到路径
sys.path.insert(0, str(Path(__file__).parent))

from core.config import validate_model
from core.errors import ConfigurationError, DataError, ToolkitError
from experiments.ablation import format_ablation_table, run_ablation, write_ablation_csv
from experiments.backtest import run_backtest, write_backtest_csv
from experiments.settings import TASKS, AppConfig, DeskScalePreset, load_app_config
from experiments.tasks import build_task, checkpoint_metadata, label_splits, network_config_for, synth_splits
from network.checkpoint import CheckpointManager, load_checkpoint
from network.graph import build_network, receptive_field
from simulators.market import optimal_actions, profit_per_step
from simulators.store import DataStore, load_ticks, save_ticks, save_tracking
from simulators.tracking import SPLITS, generate_dataset
from training.gradcheck import run_gradcheck
from training.trainer import default_metric, evaluate, train, write_history_csv

logger = logging.getLogger(__name__)

EXIT_GRADCHECK_FAILED = 4


def setup_logging(log_file: Path, level: str = "INFO"):
    """
    配置日志：文件 + 标准错误输出（标准输出只留给命令结果）

    Args:
        log_file: 日志文件路径
        level: 日志级别
    """
    log_file.parent.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(str(log_file), encoding='utf-8'),
            logging.StreamHandler(sys.stderr)
        ],
        force=True
    )


class _ArgumentParser(argparse.ArgumentParser):
    """参数错误以ConfigurationError抛出，统一映射为退出码1"""

    def error(self, message):
        raise ConfigurationError(f"{self.prog}: {message}")


def _int_list(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"需要逗号分隔的整数: {text}")
    if not values:
        raise argparse.ArgumentTypeError("列表不能为空")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="随机种子")
    common.add_argument("--config", type=str, default=None, help="用户配置文件（JSON，覆盖默认配置）")
    common.add_argument("--out-dir", type=str, default=None, help="输出目录")
    common.add_argument("--data-dir", type=str, default=None, help="数据目录")
    common.add_argument("--desk-scale", action="store_true", help="使用桌面规模预设")

    arch = _ArgumentParser(add_help=False)
    arch.add_argument("--task", choices=TASKS, default="tracking", help="任务")
    arch.add_argument("--variant", choices=["ufcnn", "fcn"], default=None, help="网络变体")
    arch.add_argument("--levels", type=int, default=None, help="分辨率层数")
    arch.add_argument("--filters", type=int, default=None, help="每层滤波器数")
    arch.add_argument("--kernel-len", type=int, default=None, help="卷积核长度")
    arch.add_argument("--iters", type=int, default=None, help="训练迭代数")

    market = _ArgumentParser(add_help=False)
    market.add_argument("--cost-per-trade", type=float, default=None, help="每笔交易成本")
    market.add_argument("--max-position", type=int, default=None, help="最大持仓")
    market.add_argument("--scale-features", action="store_true", help="特征按训练集标准差缩放")

    parser = _ArgumentParser(prog="ufcnn", description="UFCNN工具箱")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_ArgumentParser)

    sub.add_parser("gen-tracking", parents=[common], help="生成跟踪数据集")
    sub.add_parser("synth-quotes", parents=[common, market], help="合成报价")
    sub.add_parser("label-trades", parents=[common, market], help="最优动作标注")
    sub.add_parser("train", parents=[common, arch, market], help="训练")
    p_eval = sub.add_parser("eval", parents=[common, arch, market], help="评估检查点")
    p_eval.add_argument("--checkpoint", type=str, default=None, help="检查点路径（默认 <out-dir>/checkpoints/best）")
    p_eval.add_argument("--split", choices=SPLITS, default="test", help="评估划分")
    sub.add_parser("gradcheck", parents=[common], help="梯度检验")
    p_bt = sub.add_parser("backtest", parents=[common, market], help="回测")
    p_bt.add_argument("--checkpoint", type=str, default=None, help="分类器检查点（默认 <out-dir>/checkpoints/best，存在时使用）")
    p_bt.add_argument("--split", choices=SPLITS, default="test", help="回测划分")
    p_ab = sub.add_parser("ablation", parents=[common], help="消融实验")
    p_ab.add_argument("--levels", type=_int_list, default=None, help="层数列表，如 1,2,3")
    p_ab.add_argument("--filters", type=_int_list, default=None, help="滤波器数列表，如 16,32")
    p_ab.add_argument("--variant", choices=["ufcnn", "fcn", "both"], default="both", help="网络变体")
    p_ab.add_argument("--iters", type=int, default=None, help="每个组合的训练迭代数")
    return parser


# ========== 配置 ==========

def resolve_config(args) -> AppConfig:
    """默认配置 < 用户配置文件 < 命令行参数"""
    app = load_app_config(args.config)
    updates = {}
    if args.out_dir:
        updates["out_dir"] = args.out_dir
    if args.data_dir:
        updates["data_dir"] = args.data_dir

    trading = {}
    if getattr(args, "cost_per_trade", None) is not None:
        trading["cost_per_trade"] = args.cost_per_trade
    if getattr(args, "max_position", None) is not None:
        trading["max_position"] = args.max_position
    if getattr(args, "scale_features", False):
        trading["scale_features"] = True
    if trading:
        updates["trading"] = {**app.trading.model_dump(), **trading}

    if args.desk_scale:
        preset = app.desk_scale
        updates["tracking"] = {**app.tracking.model_dump(), "n_train": preset.n_train,
                               "n_val": preset.n_val, "T": preset.T}
        updates["train"] = {**app.train.model_dump(), "total_iters": preset.total_iters}
    if getattr(args, "iters", None) is not None:
        updates["train"] = {**updates.get("train", app.train.model_dump()), "total_iters": args.iters}

    if not updates:
        return app
    return validate_model(AppConfig, {**app.model_dump(), **updates})


def _out_dir(app: AppConfig) -> Path:
    path = Path(app.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ========== 命令 ==========

def cmd_gen_tracking(args, app: AppConfig) -> int:
    settings = app.tracking
    dataset = generate_dataset(settings, settings.n_train, settings.n_val, settings.n_test, settings.T,
                               seed=args.seed, progress=app.logging.progress)
    directory = save_tracking(dataset, DataStore(app.data_dir).tracking_dir)
    print(f"tracking dataset: {directory} (input_mean={dataset.input_mean:.6g})")
    return 0


def cmd_synth_quotes(args, app: AppConfig) -> int:
    store = DataStore(app.data_dir)
    splits = synth_splits(app, args.seed)
    for name, series_list in splits.items():
        for i, ticks in enumerate(series_list):
            save_ticks(store.tick_path(name, i), ticks)
    counts = store.summary()["ticks"]
    logger.info(f"报价已写出: dir={store.ticks_dir}, counts={counts}")
    per_split = ", ".join(f"{s}={n}" for s, n in counts.items())
    print(f"quotes: {sum(counts.values())} files in {store.ticks_dir} ({per_split})")
    return 0


def cmd_label_trades(args, app: AppConfig) -> int:
    store = DataStore(app.data_dir)
    splits = {name: [load_ticks(p) for p in store.tick_files(name)] for name in SPLITS}
    if not any(splits.values()):
        raise DataError(f"没有可标注的报价文件: {store.ticks_dir}")

    labels = label_splits(splits, app, progress=app.logging.progress)
    params = {"max_position": app.trading.max_position, "cost_per_trade": app.trading.cost_per_trade}
    for name in SPLITS:
        for i, (ticks, actions) in enumerate(zip(splits[name], labels[name])):
            save_ticks(store.tick_path(name, i, labeled=True), ticks, actions)
        if splits[name]:
            bound = [profit_per_step(optimal_actions(t, params)[1], len(t)) for t in splits[name]]
            print(f"{name}: {len(splits[name])} sequences, upper bound profit_per_step={sum(bound) / len(bound):.6g}")
    return 0


def cmd_train(args, app: AppConfig) -> int:
    out_dir = _out_dir(app)
    data = build_task(args.task, app, seed=args.seed, data_dir=args.data_dir, progress=app.logging.progress)
    config = network_config_for(
        data, app, variant=args.variant, levels=args.levels,
        filters_per_level=args.filters, kernel_len=args.kernel_len,
    )
    net = build_network(config, seed=args.seed)
    metadata = checkpoint_metadata(data, args.seed)

    manager = CheckpointManager(out_dir / "checkpoints")
    manager.save(net, "initial", metadata)

    train_config = app.train.model_copy(update={"seed": args.seed})
    net, history = train(net, data, train_config, progress=app.logging.progress)
    best = manager.save(net, "best", metadata)
    write_history_csv(out_dir / "history.csv", history)

    if config.variant == "ufcnn":
        logger.info(f"感受野: {receptive_field(config)}")
    print(f"checkpoint: {best}")
    if history:
        print(f"{history[-1].iteration} iterations, final val {default_metric(config.loss).value}={history[-1].val_metric:.6g}")
    return 0


def _checkpoint_path(args, app: AppConfig) -> Path:
    if args.checkpoint:
        return Path(args.checkpoint)
    return CheckpointManager(_out_dir(app) / "checkpoints").path_for("best")


def cmd_eval(args, app: AppConfig) -> int:
    net, metadata = load_checkpoint(_checkpoint_path(args, app))
    task = metadata.get("task", args.task)
    seed = metadata.get("seed", args.seed)
    data = build_task(task, app, seed=seed, data_dir=args.data_dir, preprocessing=metadata)

    split = data.split(args.split)
    if len(split) == 0:
        raise DataError(f"评估划分为空: {args.split}")
    metric = default_metric(net.config.loss)
    value = evaluate(net, split, metric)
    print(f"{metric.value} {args.split} {value:.10g}")
    return 0


def cmd_gradcheck(args, app: AppConfig) -> int:
    report = run_gradcheck(args.seed)
    for line in report.lines():
        print(line)
    return 0 if report.passed else EXIT_GRADCHECK_FAILED


def cmd_backtest(args, app: AppConfig) -> int:
    out_dir = _out_dir(app)
    model, metadata = (None, {})
    checkpoint = _checkpoint_path(args, app)
    if args.checkpoint or checkpoint.exists():
        model, metadata = load_checkpoint(checkpoint)
        if metadata.get("task") != "trading":
            if args.checkpoint:
                raise ConfigurationError(f"检查点不是交易分类器: task={metadata.get('task')}")
            logger.warning(f"默认检查点不是交易分类器，只回测基准策略: path={checkpoint}, task={metadata.get('task')}")
            model, metadata = (None, {})

    data = build_task("trading", app, seed=metadata.get("seed", args.seed), data_dir=args.data_dir,
                      preprocessing=metadata or None, progress=app.logging.progress)
    split = data.split(args.split)
    if len(split) == 0:
        raise DataError(f"回测划分为空: {args.split}")

    params = {"max_position": app.trading.max_position, "cost_per_trade": app.trading.cost_per_trade}
    rows = run_backtest(data.sources[args.split], split.targets, model, params,
                        seed=args.seed, stats=data.metadata)
    path = write_backtest_csv(out_dir / "backtest.csv", rows)
    for row in rows:
        print(f"{row.strategy:<8} profit_per_step={row.profit_per_step:.6g} accuracy={row.accuracy:.4f}")
    print(f"report: {path}")
    return 0


def cmd_ablation(args, app: AppConfig) -> int:
    out_dir = _out_dir(app)
    if args.desk_scale:
        preset = app.desk_scale
    else:
        preset = DeskScalePreset(
            n_train=max(app.tracking.n_train, 1), n_val=max(app.tracking.n_val, 1), T=app.tracking.T,
            total_iters=max(app.train.total_iters, 1),
        )
    if args.iters is not None:
        preset = preset.model_copy(update={"total_iters": args.iters})
    levels = args.levels or preset.levels
    filters = args.filters or preset.filters
    variants = ["ufcnn", "fcn"] if args.variant == "both" else [args.variant]

    result = run_ablation(levels, filters, variants, preset, seed=args.seed,
                          app_config=app, progress=app.logging.progress)
    write_ablation_csv(out_dir / "ablation.csv", result)
    for variant in variants:
        print(format_ablation_table(result, variant))
        print()
    return 0


HANDLERS = {
    "gen-tracking": cmd_gen_tracking,
    "synth-quotes": cmd_synth_quotes,
    "label-trades": cmd_label_trades,
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "backtest": cmd_backtest,
    "ablation": cmd_ablation,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    执行一条命令

    Args:
        argv: 命令行参数（不含程序名）

    Returns:
        退出码
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return 1
        app = resolve_config(args)
    except ToolkitError as e:
        print(f"错误: {e}", file=sys.stderr)
        return e.exit_code
    except SystemExit as e:
        return int(e.code or 0)

    setup_logging(Path(app.out_dir) / app.logging.file, app.logging.level)
    logger.info(f"命令开始: {args.command}, seed={args.seed}")

    try:
        code = HANDLERS[args.command](args, app)
    except ToolkitError as e:
        logger.error(f"命令失败: {args.command}, {type(e).__name__}: {e}")
        print(f"错误: {e}", file=sys.stderr)
        return e.exit_code

    logger.info(f"命令结束: {args.command}, exit={code}")
    return code


if __name__ == "__main__":
    sys.exit(run())
