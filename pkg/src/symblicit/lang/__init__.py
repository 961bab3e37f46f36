"""Guarded-command modelling language: parsing, checking and compilation."""

from __future__ import annotations

from typing import Any, Mapping, Optional, Union

from .. import arith as _arith
from .ast import ModelAst, format_expr, format_model
from .compiler import CompiledModel, ModelError, Variable, check_model, compile_model
from .parser import ModelSyntaxError
from .properties import (
    EXP_REWARD,
    LONG_RUN_AVG,
    REACH_PROB,
    PropertySpec,
    parse_property,
)

__all__ = [
    "ModelAst",
    "CompiledModel",
    "ModelError",
    "ModelSyntaxError",
    "PropertySpec",
    "Variable",
    "REACH_PROB",
    "EXP_REWARD",
    "LONG_RUN_AVG",
    "parse_model",
    "parse_property",
    "compile_model",
    "load_model",
    "format_model",
    "format_expr",
]


def parse_model(text: str) -> ModelAst:
    """Parse model source and run every static check that needs no overrides."""
    from .parser import parse_model_syntax

    ast = parse_model_syntax(text)
    check_model(ast)
    return ast


def load_model(
    text: str,
    constants: Optional[Mapping[str, Any]] = None,
    arith: Union[str, _arith.Arith, None] = None,
) -> CompiledModel:
    """Parse and compile in one step."""
    from .parser import parse_model_syntax

    return compile_model(parse_model_syntax(text), constants, arith)
