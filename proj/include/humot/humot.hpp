#pragma once

#include "humot/error.hpp"
#include "humot/rng.hpp"
#include "humot/skeleton.hpp"

#include "humot/mocap/angular.hpp"
#include "humot/mocap/builtin.hpp"
#include "humot/mocap/bvh.hpp"
#include "humot/mocap/chunks.hpp"
#include "humot/mocap/dataset.hpp"
#include "humot/mocap/motion_io.hpp"
#include "humot/mocap/prepare.hpp"
#include "humot/mocap/synthetic.hpp"
#include "humot/mocap/template_io.hpp"

#include "humot/model/autoencoder.hpp"
#include "humot/model/config.hpp"

#include "humot/training/adam.hpp"
#include "humot/training/checkpoint.hpp"
#include "humot/training/config.hpp"
#include "humot/training/losses.hpp"
#include "humot/training/trainer.hpp"

#include "humot/tasks/evaluation.hpp"
#include "humot/tasks/metrics.hpp"
#include "humot/tasks/report.hpp"
#include "humot/tasks/retarget.hpp"

#include "humot/cli/run_config.hpp"
