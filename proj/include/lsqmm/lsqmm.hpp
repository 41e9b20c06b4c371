#pragma once

#include "dataset.hpp"
#include "dual_qp.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "model_io.hpp"
#include "qmatrix.hpp"
#include "qsvd.hpp"
#include "quaternion.hpp"
#include "real_rep.hpp"
#include "trainer.hpp"
#include "version.hpp"
