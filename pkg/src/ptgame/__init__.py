"""Parametric timed games: winning-parameter synthesis, strategies and controllers."""

from importlib.resources import files

from .compose import product, verify
from .controller import export_controller, synthesize_controller
from .model import PTG, ModelError
from .solver import solve
from .strategy import add_epsilon_bounds, parse_strategy, serialize_strategy
from .syntax import format_params, parse_model, parse_union, parse_zone, serialize_model

__version__ = "0.1.0"

BUNDLED_MODELS = ("fig1", "fig3", "fig4a", "fig4b", "prodcell")


def bundled_model(name: str) -> str:
    """Source text of a bundled model."""
    return files(__name__).joinpath("models", f"{name}.ptg").read_text()


__all__ = [
    "PTG", "ModelError", "BUNDLED_MODELS", "add_epsilon_bounds", "bundled_model", "export_controller",
    "format_params", "parse_model", "parse_strategy", "parse_union", "parse_zone", "product",
    "serialize_model", "serialize_strategy", "solve", "synthesize_controller", "verify",
]
