"""Neural passage quality scorers.

Produces score files (docno<TAB>score, higher is better) and latency records
for the pruning toolkit; the file formats are the only coupling between the
two packages.
"""

__version__ = "0.1.0"

from qprune_sidecar.scoring import (
    ScorerSpec,
    magnitude_score,
    measure_latency,
    ppl_score,
    read_corpus,
    write_scores,
)
from qprune_sidecar.supervised import SupervisedTrainConfig, supervised_score, supervised_train
from qprune_sidecar.vocab import WordVocab
