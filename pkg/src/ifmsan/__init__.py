"""Sample-and-hold sanitization of CNN input feature maps."""
from .errors import (BudgetUnreachable, ConfigError, DimensionError, FormatError,
                     ParameterError, UndefinedRatioError)
from .metrics import (AccuracyHistogram, SweepRecord, accuracy_histogram, attenuation_threshold,
                      eff_san, multi_layer_sweep, sweep)
from .nn import Model, infer, layer_forward, top_class
from .privacy import (ControlResult, PrivacyBudget, control_sanitize, epsilon_lower_bound,
                      meets_degree, observed_privacy_loss)
from .sanitizer import SanitizationPlan, sanitize_ifm, sanitize_stream, sanitize_window
from .tensor import Tensor, fold, unfold, zero_ratio

__version__ = "0.1.0"
