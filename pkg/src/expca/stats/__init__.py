from .anova import (DEFAULT_THRESHOLD, AnovaRecord, ProbeBlock, f_upper_tail,
                    filter_positive, two_way_anova)
from .enrichment import (AnnotationMap, EnrichmentRecord, binomial_lower, binomial_tail,
                         enrich, select_top)
from .ward import Dendrogram, Merge, ward_cluster, ward_linkage
