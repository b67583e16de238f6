"""Trace-driven simulation of adaptive scalable (SVC) video streaming over a bottleneck link."""

from .errors import ConfigError, InputError, TraceFormatError
from .svc_model import (CodedUnit, DependencyGraph, GopConfig, LayerId, Scheme, add_quality_edges,
                        build_dependency_graph, build_temporal_hierarchy, decodable_units)
from .trace import BitrateLadder, LadderRow, NaluRecord, PacketRecord, ReceivedRecord, packetize, synthesize_trace
from .netsim import BandwidthSchedule, LinkConfig, default_schedule, run_link, schedule_at
from .adaptation import AdaptationUnit, EstimatorConfig, Selection, filter_packet, select_layer
from .receiver import FrameOutcome, PlayoutConfig, decodable_frame_ratio, prune_and_decode
from .metrics import ImageBuffer, mos_from_psnr, mse, psnr, reconstruct_psnr_timeline
from .scenario import RunReport, ScenarioConfig, emit_plots, run_scenario

__version__ = "0.1.0"
