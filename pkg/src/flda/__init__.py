"""Feature-level domain adaptation with dropout transfer models.

A dropout transfer model is estimated between a labeled source dataset and
an unlabeled target dataset; linear classifiers are then trained to
minimize their expected loss on the source data under that transfer.
"""

from .classify import (
    LinearModel,
    TrainConfig,
    error_rate,
    fit_flda_l,
    fit_flda_q,
    fit_lr,
    fit_ls,
    multiclass_fit_flda_q,
    predict,
)
from .data import (
    Dataset,
    load_delimited,
    load_sparse_indexed,
    missing_data_split,
    nonzero_frequencies,
    subsample,
)
from .errors import ConfigError, DataError, FLDAError, ModelError, ParseError
from .transfer import (
    DropoutTransfer,
    SourceModel,
    estimate_dropout,
    estimate_source_model,
    fit_transfer,
)

__version__ = "0.1.0"
