#pragma once

#define TRQ_VERSION_MAJOR 0
#define TRQ_VERSION_MINOR 1
#define TRQ_VERSION_PATCH 0
#define TRQ_VERSION_STRING "0.1.0"
