#ifndef DLRR_DLRR_HPP
#define DLRR_DLRR_HPP

#include "dlrr/error.hpp"
#include "dlrr/linalg.hpp"
#include "dlrr/sample_matrix.hpp"
#include "dlrr/lrr_solver.hpp"
#include "dlrr/projection.hpp"
#include "dlrr/classifiers.hpp"
#include "dlrr/features.hpp"
#include "dlrr/matrix_io.hpp"
#include "dlrr/image_io.hpp"
#include "dlrr/dataset.hpp"
#include "dlrr/corruption.hpp"
#include "dlrr/synthetic.hpp"
#include "dlrr/kv_config.hpp"
#include "dlrr/pipeline.hpp"
#include "dlrr/experiment.hpp"

#endif  // DLRR_DLRR_HPP
