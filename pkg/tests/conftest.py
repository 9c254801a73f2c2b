import pytest

from speakerfp.corpus import Corpus, LabelMap

from helpers import make_scene


@pytest.fixture
def tiny_corpus():
    return Corpus(
        scenes=(
            make_scene(
                "sc01",
                [
                    ("Joey Tribbiani", "I would, but this is a nice place and my T-shirt..."),
                    ("Rachel Green", "Oh my God! Really?! Can I see it?"),
                    ("Joey Tribbiani", "Yeah. Sure."),
                ],
                season=1,
            ),
            make_scene("sc02", [("Gunther", "Coffee?"), ("Rachel Green", "Thanks.")], season=2),
        )
    )


@pytest.fixture
def friends_map():
    return LabelMap.preset("friends")
