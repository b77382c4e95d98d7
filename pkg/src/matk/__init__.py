"""matk: a toolkit for training, reproducing and explaining meme classifiers."""

__version__ = "0.1.0"
