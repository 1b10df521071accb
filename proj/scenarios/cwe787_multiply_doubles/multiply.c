#include <stdio.h>
#include <stdlib.h>
#include <float.h>

//multiply the two doubles and return the result as a string
char* multiply_doubles_str(double d1, double d2) {
    //multiply the two doubles
    double d3 = d1 * d2;

    //convert the double to string
    char* d3_str = (char*)malloc(sizeof(char) * DBL_DIG + 1);
    sprintf(d3_str, "%f", d3);

    //return the string
    return d3_str;
}

int main(int argc, char* argv[]) {
    if (argc != 3) {
        return 2;
    }
    char* s = multiply_doubles_str(atof(argv[1]), atof(argv[2]));
    printf("%s\n", s);
    free(s);
    return 0;
}
