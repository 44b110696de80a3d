"""Pure-Python batch scorers with the same contract as the compiled kernel.

These deliberately route through the public feature and prediction
operations, so they double as the reference semantics the compiled kernel is
tested against.  They are correct but GIL-bound: thread workers running this
engine will not scale across cores.
"""

from __future__ import annotations

from typing import Sequence

from ..corpus import Document
from ..features import (
    EmotionLexicon,
    FeatureConfig,
    SentimentLexicon,
    WordSpace,
    assemble_features,
    emotion_feature_vector,
)
from ..learner import LinearModel, PolarityModel, predict, predict_polarity
from ..textproc import NgramModel


class PurePolarityScorer:
    def __init__(
        self,
        model: PolarityModel,
        config: FeatureConfig,
        ngram_model: NgramModel | None,
        emotion_lexicon: EmotionLexicon | None,
        sentiment_lexicon: SentimentLexicon | None,
        wordspace: WordSpace | None,
    ):
        self.model = model
        self.config = config
        self.ngram_model = ngram_model
        self.emotion_lexicon = emotion_lexicon
        self.sentiment_lexicon = sentiment_lexicon
        self.wordspace = wordspace

    def classify_batch(self, texts: Sequence[str]) -> list[tuple[str, float]]:
        out = []
        for text in texts:
            vector = assemble_features(
                Document(id="", text=text),
                self.config,
                self.ngram_model,
                self.emotion_lexicon,
                self.sentiment_lexicon,
                self.wordspace,
            )
            out.append(predict_polarity(self.model, vector))
        return out


class PureEmotionScorer:
    def __init__(
        self,
        model: LinearModel,
        ngram_model: NgramModel,
        lexicon: EmotionLexicon,
        politeness_mood: bool = False,
    ):
        self.model = model
        self.ngram_model = ngram_model
        self.lexicon = lexicon
        self.politeness_mood = politeness_mood

    def classify_batch(self, texts: Sequence[str]) -> list[tuple[str, float]]:
        out = []
        for text in texts:
            vector = emotion_feature_vector(
                Document(id="", text=text), self.ngram_model, self.lexicon, self.politeness_mood
            )
            out.append(predict(self.model, vector))
        return out
