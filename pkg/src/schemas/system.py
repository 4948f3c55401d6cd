"""
Pydantic schemas for plant descriptions.
"""
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic.alias_generators import to_camel

NodeKind = Literal["square", "circle"]


class CamelModel(BaseModel):
    """Base schema: camelCase on the wire, snake_case in Python."""
    model_config = ConfigDict(alias_generator=to_camel, populate_by_name=True, extra="forbid")


class NetworkSpec(CamelModel):
    """Randomly placed network of coupled second-order subsystems."""
    subsystem_count: int = Field(default=10, ge=1)
    region: float = Field(default=10.0, gt=0)
    decay_rate: float = Field(default=1.0, gt=0)
    seed: int = Field(default=0, ge=0)
    type_assignment: Optional[List[NodeKind]] = None
    positions: Optional[List[Tuple[float, float]]] = None
    state_weight: float = Field(default=1.0, gt=0)
    input_weight: float = Field(default=2.0, gt=0)

    @model_validator(mode="after")
    def check_layout(self) -> "NetworkSpec":
        count = self.subsystem_count
        if self.type_assignment is not None and len(self.type_assignment) != count:
            raise ValueError(f"typeAssignment needs {count} entries, got {len(self.type_assignment)}")
        if self.positions is not None:
            if len(self.positions) != count:
                raise ValueError(f"positions needs {count} entries, got {len(self.positions)}")
            for x, y in self.positions:
                if not (0.0 <= x <= self.region and 0.0 <= y <= self.region):
                    raise ValueError(f"position ({x}, {y}) lies outside [0, {self.region}]^2")
        return self


class SystemDocument(CamelModel):
    """Plain JSON form of an LTI system; matrices are row-major."""
    n: int = Field(..., ge=1)
    m: int = Field(..., ge=1)
    A: List[float] = Field(..., alias="A")
    B: List[float] = Field(..., alias="B")
    Q: List[float] = Field(..., alias="Q")
    R: List[float] = Field(..., alias="R")

    @model_validator(mode="after")
    def check_sizes(self) -> "SystemDocument":
        n, m = self.n, self.m
        expected = {"A": n * n, "B": n * m, "Q": n * n, "R": m * m}
        for name, size in expected.items():
            got = len(getattr(self, name))
            if got != size:
                raise ValueError(f"{name} needs {size} entries for n={n}, m={m}, got {got}")
        return self
