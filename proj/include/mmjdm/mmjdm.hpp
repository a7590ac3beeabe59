#pragma once

#include "mmjdm/error.hpp"
#include "mmjdm/io.hpp"
#include "mmjdm/mixture_em.hpp"
#include "mmjdm/model.hpp"
#include "mmjdm/pipeline.hpp"
#include "mmjdm/random.hpp"
#include "mmjdm/segmentation.hpp"
#include "mmjdm/sem.hpp"
#include "mmjdm/simulate.hpp"
#include "mmjdm/yields.hpp"
