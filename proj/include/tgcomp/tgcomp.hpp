#pragma once

#include "tgcomp/autodiff.hpp"
#include "tgcomp/checkpoint.hpp"
#include "tgcomp/config.hpp"
#include "tgcomp/corpus.hpp"
#include "tgcomp/dropout.hpp"
#include "tgcomp/embeddings.hpp"
#include "tgcomp/forward.hpp"
#include "tgcomp/grad_check.hpp"
#include "tgcomp/heads.hpp"
#include "tgcomp/inspect.hpp"
#include "tgcomp/model.hpp"
#include "tgcomp/optim.hpp"
#include "tgcomp/tensor.hpp"
#include "tgcomp/toy.hpp"
#include "tgcomp/train.hpp"
#include "tgcomp/tree.hpp"
#include "tgcomp/verify.hpp"
#include "tgcomp/vocab.hpp"
