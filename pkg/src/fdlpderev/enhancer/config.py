from dataclasses import asdict, dataclass, field, replace

from ..errors import InvalidArgumentError

FULL_CONV = ((32, 41, 5), (32, 41, 5), (64, 21, 3), (64, 21, 3))
FULL_LSTM = (1024, 1024, 36)
DESK_CONV = ((4, 9, 3), (4, 9, 3))
DESK_LSTM = (32, 36)


@dataclass(frozen=True)
class EnhancerConfig:
    conv_layers: tuple = FULL_CONV
    lstm_sizes: tuple = FULL_LSTM
    num_bands: int = 36
    reg_weight: float = 0.05
    epochs: int = 10
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 1
    seed: int = 0
    scale_preset: str = "full"
    # floor applied to envelopes before the log
    env_floor: float = 1e-10
    # "segment": standardise the log-envelope of each input matrix
    input_norm: str = "segment"
    # "zero" starts training from the unit-gain (identity) model
    final_init: str = "random"
    # fixed multiplier on the last LSTM output; log(1 / gain_floor) lets the
    # bounded cell output span the whole clamped log-gain range
    output_scale: float = 6.907755278982137

    def __post_init__(self):
        conv = tuple(tuple(int(v) for v in layer) for layer in self.conv_layers)
        object.__setattr__(self, "conv_layers", conv)
        object.__setattr__(self, "lstm_sizes", tuple(int(v) for v in self.lstm_sizes))
        for filters, kt, kq in conv:
            if filters < 1:
                raise InvalidArgumentError("conv layers need at least one filter")
            if kt % 2 == 0 or kq % 2 == 0 or kt < 1 or kq < 1:
                raise InvalidArgumentError(f"conv kernels must be odd, got {kt}x{kq}")
        if not self.lstm_sizes:
            raise InvalidArgumentError("at least one LSTM layer is required")
        if self.lstm_sizes[-1] != self.num_bands:
            raise InvalidArgumentError(
                f"last LSTM size {self.lstm_sizes[-1]} must equal num_bands {self.num_bands}")
        if self.reg_weight < 0:
            raise InvalidArgumentError("reg_weight must be >= 0")
        if self.epochs < 0 or self.batch_size < 1:
            raise InvalidArgumentError("epochs must be >= 0 and batch_size >= 1")
        if self.input_norm not in ("segment", "none"):
            raise InvalidArgumentError(f"unknown input_norm {self.input_norm!r}")
        if not self.output_scale > 0:
            raise InvalidArgumentError("output_scale must be positive")
        if self.final_init not in ("random", "zero"):
            raise InvalidArgumentError(f"unknown final_init {self.final_init!r}")

    @classmethod
    def preset(cls, scale="desk", **overrides):
        if scale == "full":
            base = dict(conv_layers=FULL_CONV, lstm_sizes=FULL_LSTM)
        elif scale == "desk":
            base = dict(conv_layers=DESK_CONV, lstm_sizes=DESK_LSTM, learning_rate=3e-3)
        else:
            raise InvalidArgumentError(f"unknown scale preset {scale!r}")
        base.update(scale_preset=scale)
        base.update(overrides)
        return cls(**base)

    def to_dict(self):
        d = asdict(self)
        d["conv_layers"] = [list(layer) for layer in self.conv_layers]
        d["lstm_sizes"] = list(self.lstm_sizes)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def replace(self, **changes):
        return replace(self, **changes)
