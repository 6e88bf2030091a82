try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        """Equivalente a ``enum.StrEnum`` (3.11+): ``str()`` y ``format()`` devuelven el valor."""

        __str__ = str.__str__
        __format__ = str.__format__

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()


class Aggregation(StrEnum):
    """Agregación de las contribuciones por fila del mapa de atención."""

    MAX = "max"
    MEAN = "mean"


class SoftmaxTerm(StrEnum):
    """Término de softmax usado en la cota refinada."""

    EXACT_SIGMA1 = "exact_sigma1"
    G1_UPPER = "g1_upper"


class CheckName(StrEnum):
    INTERLACING = "interlacing"
    UPPER_HALF = "upper_half"
    RATIO_AT_LEAST_ONE = "ratio_at_least_one"
    SOUNDNESS = "soundness"
    SHARPNESS_SPECFORMER = "sharpness_specformer"
    SHARPNESS_CASTIN = "sharpness_castin"
    STOCHASTIC_NORM = "stochastic_norm"

