"""Fine-tune a transformer speaker classifier over assembled dialogue samples
and export its pooled hidden states in the FFPA activation format."""

from .errors import ExporterError
from .export import export_activations, write_ffpa
from .finetune import Hyperparameters, finetune, load_checkpoint
from .samples import Sample, read_samples, speaker_tokens_in
from .tokenizer_ext import build_wordlevel_tokenizer, encode_batch, extend_tokenizer

__version__ = "0.1.0"
