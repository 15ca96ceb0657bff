"""
Shapes of kernel-language values.
"""

from __future__ import annotations

from dataclasses import dataclass

from elemtypes import ElemType

GRF_FILE_BYTES = 4096


@dataclass(frozen=True)
class ShapeType:
    elem: ElemType
    rows: int = 1
    cols: int = 1
    form: str = "scalar"  # scalar | vector | matrix
    is_ref: bool = False

    @classmethod
    def scalar(cls, elem: ElemType) -> "ShapeType":
        return cls(elem, 1, 1, "scalar")

    @classmethod
    def vector(cls, elem: ElemType, n: int, is_ref: bool = False) -> "ShapeType":
        return cls(elem, 1, n, "vector", is_ref)

    @classmethod
    def matrix(cls, elem: ElemType, rows: int, cols: int, is_ref: bool = False) -> "ShapeType":
        return cls(elem, rows, cols, "matrix", is_ref)

    @property
    def count(self) -> int:
        return self.rows * self.cols

    @property
    def size_bytes(self) -> int:
        return self.count * self.elem.size_bytes

    @property
    def is_scalar(self) -> bool:
        return self.form == "scalar"

    @property
    def is_matrix(self) -> bool:
        return self.form == "matrix"

    def with_elem(self, elem: ElemType) -> "ShapeType":
        return ShapeType(elem, self.rows, self.cols, self.form, False)

    def as_value(self) -> "ShapeType":
        return ShapeType(self.elem, self.rows, self.cols, self.form, False)

    def __str__(self) -> str:
        if self.form == "scalar":
            return self.elem.c_name
        if self.form == "vector":
            return f"vector<{self.elem.c_name},{self.cols}>"
        return f"matrix<{self.elem.c_name},{self.rows},{self.cols}>"
