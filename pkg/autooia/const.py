from dataclasses import dataclass


@dataclass
class Command:
    """
    Constants for CLI sub-commands.
    """
    GEN_DATA = "gen-data"
    TRAIN = "train"
    EVAL = "eval"
    ABLATE = "ablate"
    REPORT = "report"
    STATS = "stats"


@dataclass
class Ablation:
    """
    Model variants selectable with --ablation.
    """
    FULL = "full"
    LOCAL_ONLY = "local-only"
    GLOBAL_ONLY = "global-only"
    RANDOM_SELECTOR = "random-selector"
    LOCAL_SELECTOR = "local-selector"
    SINGLE_ACTION = "single-action"

    @classmethod
    def choices(cls) -> list:
        return [cls.FULL, cls.LOCAL_ONLY, cls.GLOBAL_ONLY, cls.RANDOM_SELECTOR,
                cls.LOCAL_SELECTOR, cls.SINGLE_ACTION]


@dataclass
class GridName:
    LAMBDA_SWEEP = "lambda-sweep"
    BRANCH_ABLATION = "branch-ablation"
    SINGLE_VS_MULTI = "single-vs-multi"
    MODEL_COMPARISON = "model-comparison"


@dataclass
class Split:
    TRAIN = "train"
    VAL = "val"
    TEST = "test"

    @classmethod
    def choices(cls) -> list:
        return [cls.TRAIN, cls.VAL, cls.TEST]


@dataclass
class FileName:
    """
    Names of the files that make up a dataset or a run directory.
    """
    MANIFEST = "manifest.ini"
    FEATURES_DIR = "features"
    FEATURE_SUFFIX = ".oiaf"
    ANNOTATION_SUFFIX = ".tsv"
    FINAL_CHECKPOINT = "final.oiac"
    BEST_CHECKPOINT = "best.oiac"
    TRAIN_LOG = "train_log.csv"
    RUNS_DB = "runs.db"
    RUNS_CSV = "runs.csv"
    AGGREGATE_CSV = "aggregate.csv"
    AGGREGATE_MD = "aggregate.md"
    CONFIG_INI = "oia.ini"


@dataclass
class ExitCode:
    OK = 0
    ERROR = 1
    USAGE = 2
    DATA = 3
    NUMERIC = 4
    INTERRUPTED = 130


# Label order of the annotation files; every report column follows it.
ACTIONS = ("F", "S", "L", "R")
ACTION_NAMES = (
    "Move forward",
    "Stop/Slow down",
    "Turn/change lane to the left",
    "Turn/change lane to the right",
)

EXPLANATIONS = (
    "Traffic light is green",
    "Follow traffic",
    "Road is clear",
    "Traffic light",
    "Traffic sign",
    "Obstacle: car",
    "Obstacle: person",
    "Obstacle: rider",
    "Obstacle: others",
    "No lane on the left",
    "Obstacles on the left lane",
    "Solid line on the left",
    "On the left-turn lane",
    "Traffic light allows (left)",
    "Front car turning left",
    "No lane on the right",
    "Obstacles on the right lane",
    "Solid line on the right",
    "On the right-turn lane",
    "Traffic light allows (right)",
    "Front car turning right",
)

NUM_ACTIONS = len(ACTIONS)
NUM_EXPLANATIONS = len(EXPLANATIONS)
NUM_OUTPUTS = NUM_ACTIONS + NUM_EXPLANATIONS

# driver-intent priority for the single-label variant
INTENT_PRIORITY = (1, 0, 2, 3)

ABSENT = "-"

TRAIN_LOG_COLUMNS = (
    "epoch", "lr", "train_loss", "action_mF1", "action_F1all", "expl_mF1", "expl_F1all",
)

REPORT_COLUMNS = (
    "config", "lambda", "k", "F", "S", "L", "R",
    "action_mF1", "action_F1all", "expl_mF1", "expl_F1all", "wall_time_s",
)

AGGREGATE_COLUMNS = REPORT_COLUMNS[:-1] + ("seeds",)
