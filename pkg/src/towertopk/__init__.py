"""Top-K flow detection with a width-heterogeneous TowerSketch and a priority queue array."""

__version__ = "0.1.0"

from .baselines import CountMinCU, CountSketch
from .config import PRESETS, RunConfig, resolve_config
from .hashing import DEFAULT_SEEDS, FlowId, flows_to_keys, hash32, hash_keys, keys_to_flows, murmur3_32
from .metrics import EvalResult, ExactCounts, GroundTruthTopK, compute_are, compute_precision, evaluate, exact_count, ground_truth_topk
from .pipeline import TopKPipeline, run_windows
from .pqa import PerfectPriorityQueue, PriorityQueueArray, TopKReport
from .tower import Estimate, RowSpec, TowerSketch, tower3, tower6
from .traces import ZipfSpec, gen_zipf, read_flowlog, read_pcap, write_flowlog
