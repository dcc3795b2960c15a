from .standard import StandardKind, build_standard, layout, place_discs, standard_suite
from .representative import GeneratorConfig, representative_scenarios, representative_split, sample_representative
from .random_pairs import (RandomPairConfig, RandomStatePair, build_random_dataset, load_dataset,
                           sample_random_pair, save_dataset)
