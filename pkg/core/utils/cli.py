"""
Command-line interface for AMOS-VPR
"""

import functools
from typing import Any, Callable, Dict, Optional, Sequence

import click
from rich.console import Console
from rich.table import Table

from core import __version__
from core.config import ENCODER_KINDS, Config, RunConfig
from core.errors import ConfigError, VPRError
from core.pipeline import VPRPipeline
from core.utils.logger import setup_logger

logger = setup_logger(__name__)
console = Console(stderr=True)

DEFAULTS = RunConfig()


def _parse_settings(settings: Sequence[str]) -> Dict[str, str]:
    values = {}
    for item in settings:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def build_config(options: Dict[str, Any]) -> Config:
    """Config file first, then --set pairs, then dedicated flags"""
    config = Config(options.get("config_path"))
    config.override(_parse_settings(options.get("settings") or ()))
    config.override({
        "seed": options.get("seed"),
        "workers": options.get("workers"),
        "eval.metric": options.get("metric"),
        "eval.layer": options.get("layer"),
        "eval.tolerance": options.get("tolerance"),
        "encoder.kind": options.get("encoder"),
    })
    return config


def _show(title: str, summary: Dict[str, Any]):
    table = Table(title=title)
    table.add_column("Field", style="cyan")
    table.add_column("Value", style="green")
    for key, value in summary.items():
        table.add_row(key, str(value))
    console.print(table)


def command_options(*extra: Callable) -> Callable:
    """Options shared by every command, plus the given extras"""
    shared = [
        click.option("--config", "-c", "config_path", type=click.Path(dir_okay=False), default=None,
                     help="YAML or key=value configuration file"),
        click.option("--set", "settings", multiple=True, metavar="KEY=VALUE",
                     help="Override one config key (repeatable)"),
        click.option("--seed", type=int, default=None, show_default=str(DEFAULTS.seed),
                     help="Global seed; also seeds training and toy generation unless train.seed or toy.seed is set"),
        click.option("--workers", type=int, default=None, show_default=str(DEFAULTS.workers),
                     help="Worker threads for per-image work"),
        click.option("--out", "-o", type=click.Path(file_okay=False), default="out", show_default=True,
                     help="Output directory"),
        click.option("--verbose", "-v", is_flag=True, default=False, help="Debug logging"),
    ]

    def decorate(fn: Callable) -> Callable:
        for option in reversed(list(shared) + list(extra)):
            fn = option(fn)
        return fn

    return decorate


metric_option = click.option("--metric", type=click.Choice(["cosine", "euclidean"]), default=None,
                             show_default=DEFAULTS.eval.metric, help="Descriptor distance")
layer_option = click.option("--layer", default=None, show_default=DEFAULTS.eval.layer,
                            help="Layer whose activations are encoded")
encoder_option = click.option("--encoder", type=click.Choice(ENCODER_KINDS), default=None,
                              show_default=DEFAULTS.encoder.kind, help="Descriptor encoder")
tolerance_option = click.option("--tolerance", type=int, default=None, show_default=str(DEFAULTS.eval.tolerance),
                                help="Ground-truth tolerance in frames")
gt_option = click.option("--gt", "gt_path", type=click.Path(dir_okay=False), default=None,
                         help="Ground-truth table (identity when omitted)")


def run_command(title: str) -> Callable:
    """Build the pipeline, run the command and print its key=value summary.

    VPRError subclasses exit with their own code; anything else exits 1.
    """
    def decorator(fn: Callable) -> Callable:
        @functools.wraps(fn)
        @click.pass_context
        def wrapper(ctx: click.Context, **options):
            try:
                config = build_config(options)
                run = config.run
                setup_logger(
                    "amos-vpr",
                    level="DEBUG" if options.get("verbose") else run.logging.level,
                    log_file=run.logging.file or None,
                )
                summary = fn(VPRPipeline(config), **options)
            except VPRError as e:
                logger.error(f"{title} failed: {e}")
                click.echo(f"error={type(e).__name__} message={e}", err=True)
                ctx.exit(e.exit_code)
            except Exception as e:
                logger.exception(f"{title} failed unexpectedly: {e}")
                ctx.exit(1)
            _show(title, summary)
            click.echo(" ".join(f"{key}={value}" for key, value in summary.items()))

        return wrapper

    return decorator


@click.group()
@click.version_option(version=__version__, prog_name="amos-vpr")
def cli():
    """AMOS-VPR: CNN place recognition from training to AUC"""


@cli.command("gen-toy")
@command_options(click.option("--traverse", "traverse_seed", type=int, default=None,
                              help="Write one image per place under this condition seed, plus ground truth"))
@run_command("Toy dataset")
def gen_toy_cmd(pipeline: VPRPipeline, out: str, traverse_seed: Optional[int], **_):
    """Generate a synthetic place dataset (or traverse)"""
    return pipeline.gen_toy(out, traverse_seed)


@cli.command()
@click.argument("dataset", type=click.Path(file_okay=False))
@command_options()
@run_command("Curation")
def curate(pipeline: VPRPipeline, dataset: str, out: str, **_):
    """Remove black, corrupt and frozen images from a camera-directory dataset"""
    return pipeline.curate(dataset, out)


@cli.command()
@click.argument("dataset", type=click.Path())
@command_options()
@run_command("Split")
def split(pipeline: VPRPipeline, dataset: str, out: str, **_):
    """Sample per-camera train/val listings"""
    return pipeline.split(dataset, out)


@cli.command()
@click.argument("data", type=click.Path())
@command_options(click.option("--val", "val_path", type=click.Path(), default=None,
                              help="Validation dataset or listing"))
@run_command("Training")
def train(pipeline: VPRPipeline, data: str, out: str, val_path: Optional[str], **_):
    """Train the configured network on a dataset or listing"""
    return pipeline.train(data, out, val_path)


@cli.command()
@click.argument("model", type=click.Path(dir_okay=False))
@click.argument("images", type=click.Path())
@command_options(layer_option, encoder_option)
@run_command("Extraction")
def extract(pipeline: VPRPipeline, model: str, images: str, out: str, **_):
    """Encode every image of a traverse into a descriptor file"""
    return pipeline.extract(model, images, out)


@cli.command()
@click.argument("query", type=click.Path(dir_okay=False))
@click.argument("reference", type=click.Path(dir_okay=False))
@command_options(metric_option)
@run_command("Matching")
def match(pipeline: VPRPipeline, query: str, reference: str, out: str, **_):
    """Build the query x reference confusion matrix"""
    return pipeline.match(query, reference, out)


@cli.command("eval")
@click.argument("confusion", type=click.Path(dir_okay=False))
@command_options(gt_option, tolerance_option)
@run_command("Evaluation")
def eval_cmd(pipeline: VPRPipeline, confusion: str, out: str, gt_path: Optional[str], **_):
    """Precision/recall sweep and AUC of a confusion matrix"""
    return pipeline.eval(confusion, gt_path, out)


@cli.command("compare-encoders")
@click.argument("model", type=click.Path(dir_okay=False))
@click.argument("reference", type=click.Path())
@click.argument("query", type=click.Path())
@command_options(gt_option, layer_option, metric_option, tolerance_option)
@run_command("Encoder comparison")
def compare_encoders(pipeline: VPRPipeline, model: str, reference: str, query: str, out: str,
                     gt_path: Optional[str], **_):
    """AUC of every encoder on the same layer features"""
    return pipeline.compare_encoders(model, reference, query, gt_path, out)


@cli.command("layer-sweep")
@click.argument("model", type=click.Path(dir_okay=False))
@click.argument("reference", type=click.Path())
@click.argument("query", type=click.Path())
@command_options(gt_option, encoder_option, metric_option, tolerance_option)
@run_command("Layer sweep")
def layer_sweep(pipeline: VPRPipeline, model: str, reference: str, query: str, out: str,
                gt_path: Optional[str], **_):
    """AUC of every conv and FC layer"""
    return pipeline.layer_sweep(model, reference, query, gt_path, out)


@cli.command()
@click.argument("model", type=click.Path(dir_okay=False))
@click.argument("images", type=click.Path())
@command_options(
    layer_option,
    click.option("--filter", "filter_index", type=int, default=0, show_default=True, help="Filter of --layer"),
    click.option("--top-k", "top_k", type=int, default=9, show_default=True, help="Patches to keep"),
    click.option("--aggregate", type=click.Choice(["sum", "max"]), default="sum", show_default=True,
                 help="Heat map channel aggregation"),
)
@run_command("Visualization")
def viz(pipeline: VPRPipeline, model: str, images: str, out: str, filter_index: int, top_k: int,
        aggregate: str, **_):
    """Weight mosaic, top-k patches, heat map and overlay"""
    return pipeline.viz(model, images, out, filter_index, top_k, aggregate)
