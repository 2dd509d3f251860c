#pragma once

#define FEATSTORE_VERSION "0.1.0"
