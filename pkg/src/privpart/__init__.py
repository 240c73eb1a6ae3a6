"""Privacy-aware process discovery on partitioned event logs."""

from privpart.log import END, ROOT, START, Activity, Dfg, EventLog, act, df_counts, variant_counts

__version__ = "0.1.0"

__all__ = ["END", "ROOT", "START", "Activity", "Dfg", "EventLog", "act", "df_counts", "variant_counts"]
