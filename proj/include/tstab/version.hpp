#pragma once

#define TSTAB_VERSION_MAJOR 0
#define TSTAB_VERSION_MINOR 1
#define TSTAB_VERSION_PATCH 0
#define TSTAB_VERSION "0.1.0"
