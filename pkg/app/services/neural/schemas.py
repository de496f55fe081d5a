"""
Neural schemas: cell kinds, trainable parameters, recurrent state, optimizer
state and the serialized parameter record.

Gate layout of the stacked blocks (rows of W_x, W_h and b):
    SimpleRnn: [candidate]
    Gru:       [update, reset, candidate]
    Lstm:      [input, forget, cell, output]
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel

from app.errors import ModelMismatchError

BLOCKS = ("W_x", "W_h", "b", "dense_weight", "dense_bias")
PARAMS_FORMAT_VERSION = 1


class CellKind(str, Enum):
    SIMPLE_RNN = "SimpleRnn"
    GRU = "Gru"
    LSTM = "Lstm"

    @property
    def gates(self) -> int:
        return {CellKind.SIMPLE_RNN: 1, CellKind.GRU: 3, CellKind.LSTM: 4}[self]

    @property
    def rank(self) -> int:
        return list(CellKind).index(self)

    @classmethod
    def parse(cls, name: str) -> "CellKind":
        aliases = {"rnn": cls.SIMPLE_RNN, "simplernn": cls.SIMPLE_RNN, "gru": cls.GRU, "lstm": cls.LSTM}
        try:
            return aliases[name.strip().lower().replace("_", "").replace("-", "")]
        except KeyError:
            raise ValueError(f"Unknown cell kind '{name}'")


@dataclass(frozen=True)
class ModelParams:
    """Weights of one recurrent cell plus the one-neuron dense head."""

    cell_kind: CellKind
    hidden_size: int
    weights: Dict[str, np.ndarray]

    def expected_shapes(self) -> Dict[str, tuple]:
        rows = self.cell_kind.gates * self.hidden_size
        return {
            "W_x": (rows, 1),
            "W_h": (rows, self.hidden_size),
            "b": (rows,),
            "dense_weight": (self.hidden_size,),
            "dense_bias": (1,),
        }

    def __post_init__(self):
        for name, shape in self.expected_shapes().items():
            if name not in self.weights or self.weights[name].shape != shape:
                raise ModelMismatchError(f"Block {name} must have shape {shape}")
            if not np.all(np.isfinite(self.weights[name])):
                raise ModelMismatchError(f"Block {name} has non-finite weights")

    @property
    def input_size(self) -> int:
        return 1

    def replace_weights(self, weights: Dict[str, np.ndarray]) -> "ModelParams":
        return ModelParams(self.cell_kind, self.hidden_size, {name: weights[name] for name in BLOCKS})

    def zeros_like(self) -> Dict[str, np.ndarray]:
        return {name: np.zeros_like(self.weights[name]) for name in BLOCKS}

    def count(self) -> int:
        return sum(self.weights[name].size for name in BLOCKS)


@dataclass(frozen=True)
class CellState:
    """Recurrent state; `cell_memory` is only used by the LSTM."""

    hidden: np.ndarray
    cell_memory: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, params: ModelParams, batch: Optional[int] = None) -> "CellState":
        shape = (params.hidden_size,) if batch is None else (batch, params.hidden_size)
        memory = np.zeros(shape) if params.cell_kind is CellKind.LSTM else None
        return cls(hidden=np.zeros(shape), cell_memory=memory)


@dataclass(frozen=True)
class AdamState:
    step: int
    first_moment: Dict[str, np.ndarray]
    second_moment: Dict[str, np.ndarray]
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


class WeightBlock(BaseModel):
    shape: List[int]
    values: List[float]


class ParamsRecord(BaseModel):
    """Serialized ModelParams; blocks are stored in the documented order."""

    format_version: int = PARAMS_FORMAT_VERSION
    cell_kind: CellKind
    hidden_size: int
    blocks: Dict[str, WeightBlock]

    @classmethod
    def from_params(cls, params: ModelParams) -> "ParamsRecord":
        return cls(
            cell_kind=params.cell_kind,
            hidden_size=params.hidden_size,
            blocks={
                name: WeightBlock(shape=list(params.weights[name].shape), values=params.weights[name].ravel().tolist())
                for name in BLOCKS
            },
        )

    def to_params(self) -> ModelParams:
        if self.format_version != PARAMS_FORMAT_VERSION:
            raise ModelMismatchError(f"Unsupported parameter format version {self.format_version}")
        weights = {
            name: np.array(block.values, dtype=np.float64).reshape(block.shape) for name, block in self.blocks.items()
        }
        return ModelParams(self.cell_kind, self.hidden_size, weights)


class BlockCheck(BaseModel):
    name: str
    max_relative_error: float
    passed: bool


class GradientCheckReport(BaseModel):
    cell_kind: CellKind
    tolerance: float
    blocks: List[BlockCheck] = []

    @property
    def passed(self) -> bool:
        return all(block.passed for block in self.blocks)
