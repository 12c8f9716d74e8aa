"""
共享常量定义
包含各计数模块、几何审计与命令行共用的默认参数
"""

# 报告格式版本
REPORT_VERSION = "1.0"

# 枚举预算(元素总数上限)
DEFAULT_BUDGET = 10 ** 8

# 环带宽度 Δ
DEFAULT_DELTA_WIDTH = 1

# 障碍参数
DEFAULT_EPSILON = 2
DEFAULT_M = 0

# 共轭类索引上限(超过该半径不建立 classIndex)
DEFAULT_INDEX_CAP = 10

# 默认分片数
DEFAULT_SHARDS = 1

# 默认随机种子
DEFAULT_SEED = 20240917

# 数值容差
FIT_TOLERANCE = 1e-9

# 逆元与幂次记号
INVERSE_MARK = "'"
POWER_MARK = "^"
UNICODE_INVERSE = "⁻¹"


# 群模型类型
class ModelKind:
    FREE = "free"
    FREE_PRODUCT = "free-product"


# 生成级数类型
class SeriesKind:
    SPHERE = "sphere"
    BALL = "ball"
    CONJUGACY_POINTED = "conjugacy-pointed"
    CONJUGACY_PRIMITIVE = "conjugacy-primitive"
    CONJUGACY_STABLE_CAPPED = "conjugacy-stable-capped"

    ALL = (SPHERE, BALL, CONJUGACY_POINTED, CONJUGACY_PRIMITIVE, CONJUGACY_STABLE_CAPPED)


# 实验类型(与子命令一一对应)
class ExperimentKind:
    MODEL_INFO = "model-info"
    CENSUS_BALLS = "census-balls"
    CENSUS_CONJUGACY = "census-conjugacy"
    CENSUS_BARRIERS = "census-barriers"
    CENSUS_FRACTIONAL = "census-fractional"
    CENSUS_DRIFT = "census-drift"
    AUDIT_CONTRACTION = "audit-contraction"
    ADMISSIBLE = "admissible"
    COMPLEX_BUILD = "complex-build"
    COMPLEX_LOXODROMIC = "complex-loxodromic"
    COMPLEX_ACYL = "complex-acyl"
    SERIES = "series"
    SCC_ESTIMATE = "scc-estimate"
    REPORT = "report"

    ALL = (MODEL_INFO, CENSUS_BALLS, CENSUS_CONJUGACY, CENSUS_BARRIERS, CENSUS_FRACTIONAL,
           CENSUS_DRIFT, AUDIT_CONTRACTION, ADMISSIBLE, COMPLEX_BUILD, COMPLEX_LOXODROMIC,
           COMPLEX_ACYL, SERIES, SCC_ESTIMATE, REPORT)


# 进程退出码
class ExitStatus:
    OK = 0
    FAILURE = 1
    USAGE = 2
    BUDGET = 3


# 有理性探测的固定否定措辞
NO_RECURRENCE_TEMPLATE = "no linear recurrence of order ≤ {order} on {terms} terms"
