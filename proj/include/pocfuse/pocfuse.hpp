#pragma once

#include "pocfuse/attention.hpp"
#include "pocfuse/corpus/encode.hpp"
#include "pocfuse/corpus/parse.hpp"
#include "pocfuse/corpus/tokenize.hpp"
#include "pocfuse/corpus/types.hpp"
#include "pocfuse/corpus/vocabulary.hpp"
#include "pocfuse/decode.hpp"
#include "pocfuse/error.hpp"
#include "pocfuse/eval/metrics.hpp"
#include "pocfuse/eval/report.hpp"
#include "pocfuse/eval/stopwords.hpp"
#include "pocfuse/harness/config.hpp"
#include "pocfuse/harness/experiment.hpp"
#include "pocfuse/harness/synthetic.hpp"
#include "pocfuse/markup.hpp"
#include "pocfuse/model/checkpoint.hpp"
#include "pocfuse/model/config.hpp"
#include "pocfuse/model/denoise.hpp"
#include "pocfuse/model/parameters.hpp"
#include "pocfuse/model/train.hpp"
#include "pocfuse/model/transformer.hpp"
#include "pocfuse/numerics/adam.hpp"
#include "pocfuse/numerics/functions.hpp"
#include "pocfuse/numerics/gradcheck.hpp"
#include "pocfuse/numerics/tape.hpp"
#include "pocfuse/numerics/tensor.hpp"
